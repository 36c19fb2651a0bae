#pragma once

#include <stdexcept>
#include <string>

namespace apwatch {

// Exit-code mapping used by the CLI: validation 2, numeric 3, I/O 4.

class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace apwatch

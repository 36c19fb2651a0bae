#include "apwatch/io.hpp"

#include "apwatch/error.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace apwatch {

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path(), ec);
        if (ec) {
            throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
        }
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot write '" + tmp.string() + "'");
        }
        out << content;
        if (!out.flush()) {
            throw IoError("write failed for '" + tmp.string() + "'");
        }
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        throw IoError("cannot move '" + tmp.string() + "' into place: " + ec.message());
    }
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read '" + path.string() + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> read_csv(std::istream& in, const std::string& expected_header,
                                               const std::string& origin) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ValidationError(origin + ": empty file");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != expected_header) {
        throw ValidationError(origin + ": unexpected header '" + line + "', expected '" + expected_header + "'");
    }
    std::size_t columns = 1;
    for (char c : expected_header) {
        columns += c == ',' ? 1 : 0;
    }
    std::vector<std::vector<std::string>> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) {
            fields.push_back(field);
        }
        if (!line.empty() && line.back() == ',') {
            fields.emplace_back();
        }
        if (fields.size() != columns) {
            throw ValidationError(origin + ":" + std::to_string(line_no) + ": expected " + std::to_string(columns) +
                                  " columns, got " + std::to_string(fields.size()));
        }
        rows.push_back(std::move(fields));
    }
    return rows;
}

std::string format_fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
    return buf;
}

std::string format_exact(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

double parse_double(const std::string& text, const std::string& what) {
    try {
        std::size_t used = 0;
        double d = std::stod(text, &used);
        if (used == text.size()) {
            return d;
        }
    } catch (const std::logic_error&) {
    }
    throw ValidationError(what + ": '" + text + "' is not a number");
}

long long parse_int(const std::string& text, const std::string& what) {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
        throw ValidationError(what + ": '" + text + "' is not an integer");
    }
    return v;
}

}  // namespace apwatch

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace apwatch {

/// Flat `key = value` configuration. Every key must be known; unknown keys
/// are validation errors so typos never pass silently.
class FlatConfig {
public:
    /// Built-in defaults for every documented key.
    static FlatConfig defaults();

    /// Defaults overlaid with the contents of a config file.
    static FlatConfig load(const std::string& path);

    /// Parses `key = value` lines; `#` starts a comment.
    void merge_text(const std::string& text, const std::string& origin);

    /// Applies a single `key=value` override.
    void apply_override(const std::string& assignment);

    void set(const std::string& key, const std::string& value);

    bool has(const std::string& key) const;
    const std::string& get(const std::string& key) const;
    double get_double(const std::string& key) const;
    std::int64_t get_int(const std::string& key) const;
    std::uint64_t get_uint(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::vector<std::string> get_list(const std::string& key) const;

    const std::map<std::string, std::string>& entries() const { return entries_; }

    /// Canonical `key = value` text (sorted by key), used for manifests and fingerprints.
    std::string to_text() const;

    /// Whether `key` belongs to the documented key set.
    static bool is_known_key(const std::string& key);

private:
    std::map<std::string, std::string> entries_;
};

/// Parses integer ranges like "1..10" or lists like "1,3,5".
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

/// 64-bit FNV-1a; used to fingerprint effective configs in manifests.
std::uint64_t fingerprint(const std::string& text);
std::string fingerprint_hex(const std::string& text);

}  // namespace apwatch

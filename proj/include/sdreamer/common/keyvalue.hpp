#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sdreamer {

// Flat `dotted.key = value` text documents. Used for the run config, the
// container `meta` header and the config block embedded in checkpoints.
//
// Lines are `key = value`; `#` starts a comment; blank lines are ignored.
// Keys are kept sorted so formatting is canonical.
class KeyValues {
public:
    static KeyValues parse(std::string_view text, const std::string& source = "<text>");
    static KeyValues load(const std::string& path);

    std::string format() const;

    bool contains(const std::string& key) const { return values_.count(key) != 0; }
    const std::map<std::string, std::string>& entries() const noexcept { return values_; }

    void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
    void set(const std::string& key, const char* value) { values_[key] = value; }
    void set(const std::string& key, double value);
    void set(const std::string& key, std::int64_t value);
    void set(const std::string& key, std::size_t value) { set(key, static_cast<std::int64_t>(value)); }
    void set(const std::string& key, int value) { set(key, static_cast<std::int64_t>(value)); }
    void set(const std::string& key, bool value) { values_[key] = value ? "true" : "false"; }

    std::optional<std::string> get(const std::string& key) const;

    // Typed accessors; throw ConfigError naming the key on a malformed value.
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<std::string> get_list(const std::string& key) const;
    std::vector<double> get_doubles(const std::string& key) const;

    // Sub-document of all keys starting with `prefix.`; the prefix is stripped.
    KeyValues section(const std::string& prefix) const;

    // Overlay: every entry of `other` replaces ours.
    void merge(const KeyValues& other);

private:
    std::map<std::string, std::string> values_;
};

// Split on commas, trimming whitespace; empty items are dropped.
std::vector<std::string> split_list(std::string_view text);
std::string trim(std::string_view text);

// Round-trippable text for a double (shortest form that parses back exactly).
std::string format_double(double value);

}  // namespace sdreamer

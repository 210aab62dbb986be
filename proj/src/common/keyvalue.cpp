#include "sdreamer/common/keyvalue.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "sdreamer/common/error.hpp"

namespace sdreamer {

std::string trim(std::string_view text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = text.find_last_not_of(" \t\r\n");
    return std::string(text.substr(first, last - first + 1));
}

std::vector<std::string> split_list(std::string_view text) {
    std::vector<std::string> items;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto end = comma == std::string_view::npos ? text.size() : comma;
        auto item = trim(text.substr(start, end - start));
        if (!item.empty()) {
            items.push_back(std::move(item));
        }
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return items;
}

std::string format_double(double value) {
    char buffer[64];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, result.ptr);
}

KeyValues KeyValues::parse(std::string_view text, const std::string& source) {
    KeyValues kv;
    std::size_t offset = 0;
    while (offset < text.size()) {
        auto end = text.find('\n', offset);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        std::string_view line = text.substr(offset, end - offset);
        const auto hash = line.find('#');
        if (hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        const auto stripped = trim(line);
        if (!stripped.empty()) {
            const auto eq = stripped.find('=');
            if (eq == std::string::npos) {
                throw FormatError("expected 'key = value'", source, offset);
            }
            auto key = trim(std::string_view(stripped).substr(0, eq));
            if (key.empty()) {
                throw FormatError("empty key", source, offset);
            }
            kv.values_[key] = trim(std::string_view(stripped).substr(eq + 1));
        }
        offset = end + 1;
    }
    return kv;
}

KeyValues KeyValues::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str(), path);
}

std::string KeyValues::format() const {
    std::string out;
    for (const auto& [key, value] : values_) {
        out += key;
        out += " = ";
        out += value;
        out += '\n';
    }
    return out;
}

void KeyValues::set(const std::string& key, double value) { values_[key] = format_double(value); }

void KeyValues::set(const std::string& key, std::int64_t value) { values_[key] = std::to_string(value); }

std::optional<std::string> KeyValues::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::string KeyValues::get_string(const std::string& key, const std::string& fallback) const {
    return get(key).value_or(fallback);
}

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    T value{};
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    const auto result = std::from_chars(first, last, value);
    if (result.ec != std::errc() || result.ptr != last) {
        throw ConfigError(key + ": cannot parse '" + text + "' as a number");
    }
    return value;
}

}  // namespace

double KeyValues::get_double(const std::string& key, double fallback) const {
    const auto v = get(key);
    return v ? parse_number<double>(key, *v) : fallback;
}

std::int64_t KeyValues::get_int(const std::string& key, std::int64_t fallback) const {
    const auto v = get(key);
    return v ? parse_number<std::int64_t>(key, *v) : fallback;
}

bool KeyValues::get_bool(const std::string& key, bool fallback) const {
    const auto v = get(key);
    if (!v) {
        return fallback;
    }
    if (*v == "true" || *v == "1" || *v == "on" || *v == "yes") {
        return true;
    }
    if (*v == "false" || *v == "0" || *v == "off" || *v == "no") {
        return false;
    }
    throw ConfigError(key + ": expected a boolean, got '" + *v + "'");
}

std::vector<std::string> KeyValues::get_list(const std::string& key) const {
    const auto v = get(key);
    return v ? split_list(*v) : std::vector<std::string>{};
}

std::vector<double> KeyValues::get_doubles(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : get_list(key)) {
        out.push_back(parse_number<double>(key, item));
    }
    return out;
}

KeyValues KeyValues::section(const std::string& prefix) const {
    KeyValues sub;
    const std::string lead = prefix + ".";
    for (const auto& [key, value] : values_) {
        if (key.rfind(lead, 0) == 0) {
            sub.values_[key.substr(lead.size())] = value;
        }
    }
    return sub;
}

void KeyValues::merge(const KeyValues& other) {
    for (const auto& [key, value] : other.values_) {
        values_[key] = value;
    }
}

}  // namespace sdreamer

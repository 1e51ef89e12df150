#pragma once

#include <map>
#include <optional>
#include <string>

namespace gescd {

/// Flat, sectioned key-value configuration. File syntax:
///
///   # comment
///   backend = synthetic
///   [threshold]
///   b_right = 0.05
///
/// Section headers prefix the following keys with "<section>."; fully
/// dotted keys ("threshold.b_right = 0.05") work anywhere. Lookups fall
/// back to built-in defaults, and the effective snapshot lists every known
/// key with the value actually in force.
class Config {
public:
    Config();

    static Config from_file(const std::string& path);

    /// Parses config text; throws Error{InvalidArgument} on malformed lines.
    void parse(const std::string& text);

    /// Sets a key; unknown keys throw Error{InvalidArgument} naming the key.
    void set(const std::string& key, const std::string& value);

    bool has(const std::string& key) const;

    /// Effective value (explicit or default). Unknown key -> error.
    std::string get(const std::string& key) const;

    double get_double(const std::string& key) const;
    int get_int(const std::string& key) const;
    bool get_bool(const std::string& key) const;

    /// Every known key with its effective value, sorted by key.
    std::map<std::string, std::string> snapshot() const;

private:
    std::map<std::string, std::string> values_;    // explicit settings
    std::map<std::string, std::string> defaults_;  // full key space
};

}  // namespace gescd

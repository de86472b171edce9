#pragma once

#include <set>
#include <string>

#include "hlt/errors.hpp"
#include "json.hpp"

namespace hlt::util {

/// Reads fields from a JSON object and remembers which keys were consumed so
/// that finish() can reject anything left over (typos in config files).
class JsonReader {
public:
    JsonReader(const nlohmann::json& j, std::string context) : j_(j), context_(std::move(context)) {
        if (!j_.is_object()) throw ConfigError(context_ + ": expected a JSON object");
    }

    template <typename T>
    T required(const std::string& key) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) throw ConfigError(context_ + ": missing required key '" + key + "'");
        return convert<T>(*it, key);
    }

    template <typename T>
    T optional(const std::string& key, T fallback) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return fallback;
        return convert<T>(*it, key);
    }

    const nlohmann::json* object(const std::string& key) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return nullptr;
        if (!it->is_object()) throw ConfigError(context_ + ": '" + key + "' must be an object");
        return &*it;
    }

    const nlohmann::json* array(const std::string& key) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return nullptr;
        if (!it->is_array()) throw ConfigError(context_ + ": '" + key + "' must be an array");
        return &*it;
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigError(context_ + ": unknown key '" + it.key() + "'");
        }
    }

private:
    template <typename T>
    T convert(const nlohmann::json& v, const std::string& key) const {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw ConfigError(context_ + ": '" + key + "' must be a boolean");
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) throw ConfigError(context_ + ": '" + key + "' must be an integer");
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) throw ConfigError(context_ + ": '" + key + "' must be a number");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw ConfigError(context_ + ": '" + key + "' must be a string");
        }
        return v.get<T>();
    }

    const nlohmann::json& j_;
    std::string context_;
    std::set<std::string> seen_;
};

}  // namespace hlt::util

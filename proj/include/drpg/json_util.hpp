#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "drpg/error.hpp"

namespace drpg::json_util {

using nlohmann::json;

inline const json& field(const json& j, const char* name) {
    if (!j.is_object()) throw Error(ErrorCode::SchemaViolation, "record is not an object");
    auto it = j.find(name);
    if (it == j.end()) {
        throw Error(ErrorCode::SchemaViolation, std::string("missing field \"") + name + "\"");
    }
    return *it;
}

template <class T>
T get(const json& j, const char* name) {
    const auto& v = field(j, name);
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorCode::SchemaViolation, std::string("field \"") + name + "\" is ill-typed");
    }
}

template <class T>
std::optional<T> get_optional(const json& j, const char* name) {
    if (!j.is_object()) throw Error(ErrorCode::SchemaViolation, "record is not an object");
    auto it = j.find(name);
    if (it == j.end() || it->is_null()) return std::nullopt;
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorCode::SchemaViolation, std::string("field \"") + name + "\" is ill-typed");
    }
}

}  // namespace drpg::json_util

#pragma once

// Shared test utilities: a minimal JSON-schema checker (the subset used by
// the shipped schemas) and deterministic random helpers.

#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace testutil {

using nlohmann::json;

inline json load_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    json j;
    is >> j;
    return j;
}

// Validates `value` against `schema`, supporting: type, properties, required,
// additionalProperties (boolean), items (single schema), enum, minItems.
// Returns human-readable error strings; empty means valid.
inline void validate_schema(const json& schema, const json& value, const std::string& where,
                            std::vector<std::string>& errors) {
    if (schema.contains("type")) {
        const std::string t = schema.at("type").get<std::string>();
        bool ok = true;
        if (t == "object") ok = value.is_object();
        else if (t == "array") ok = value.is_array();
        else if (t == "string") ok = value.is_string();
        else if (t == "number") ok = value.is_number();
        else if (t == "integer") ok = value.is_number_integer() || value.is_number_unsigned();
        else if (t == "boolean") ok = value.is_boolean();
        else errors.push_back(where + ": unsupported schema type '" + t + "'");
        if (!ok) {
            errors.push_back(where + ": expected type " + t + ", got " + value.type_name());
            return;
        }
    }
    if (schema.contains("enum")) {
        bool found = false;
        for (const auto& e : schema.at("enum"))
            if (e == value) found = true;
        if (!found) errors.push_back(where + ": value not in enum");
    }
    if (value.is_object()) {
        if (schema.contains("required"))
            for (const auto& key : schema.at("required"))
                if (!value.contains(key.get<std::string>()))
                    errors.push_back(where + ": missing required key '" + key.get<std::string>() +
                                     "'");
        const json props = schema.value("properties", json::object());
        const bool extra_ok = schema.value("additionalProperties", true);
        for (const auto& [key, sub] : value.items()) {
            if (props.contains(key)) {
                validate_schema(props.at(key), sub, where + "." + key, errors);
            } else if (!extra_ok) {
                errors.push_back(where + ": unexpected key '" + key + "'");
            }
        }
    }
    if (value.is_array()) {
        if (schema.contains("minItems") &&
            value.size() < schema.at("minItems").get<size_t>())
            errors.push_back(where + ": fewer than minItems entries");
        if (schema.contains("items")) {
            size_t idx = 0;
            for (const auto& sub : value) {
                validate_schema(schema.at("items"), sub, where + "[" + std::to_string(idx) + "]",
                                errors);
                ++idx;
            }
        }
    }
}

inline std::vector<std::string> schema_errors(const json& schema, const json& value) {
    std::vector<std::string> errors;
    validate_schema(schema, value, "$", errors);
    return errors;
}

inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

inline std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

} // namespace testutil

#pragma once

#include "medprompt/errors.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <string_view>

namespace medprompt {

/// Parse JSON bytes, converting nlohmann's byte offset into a line/column
/// position in the error message.
inline nlohmann::json parse_json(std::string_view bytes, const std::string& what) {
    try {
        return nlohmann::json::parse(bytes);
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t offset = e.byte;
        std::size_t line = 1;
        std::size_t col = 1;
        for (std::size_t i = 0; i < offset && i < bytes.size(); ++i) {
            if (bytes[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError(what + ": malformed JSON at line " + std::to_string(line) +
                         ", column " + std::to_string(col) + " (byte " +
                         std::to_string(offset) + ")");
    }
}

inline std::string require_string(const nlohmann::json& obj, const char* key,
                                  const std::string& where) {
    if (!obj.is_object() || !obj.contains(key) || !obj[key].is_string())
        throw ParseError(where + ": missing string field \"" + key + "\"");
    return obj[key].get<std::string>();
}

inline double require_number(const nlohmann::json& obj, const char* key,
                             const std::string& where) {
    if (!obj.is_object() || !obj.contains(key) || !obj[key].is_number())
        throw ParseError(where + ": missing numeric field \"" + key + "\"");
    return obj[key].get<double>();
}

} // namespace medprompt

#pragma once

#include <json.hpp>

#include <string>

namespace fbd {

/// Parses a structured key-value document (YAML; JSON is a subset) into a
/// JSON value. Scalars keep their natural type: integers, reals, booleans,
/// null, strings. Throws ConfigError with the parser's position on failure.
nlohmann::json parse_text_document(const std::string& text);
nlohmann::json load_text_document(const std::string& path);

/// Block-style YAML rendering of a JSON value.
std::string render_text_document(const nlohmann::json& j);

/// Reads a real that may be spelled "inf", "+inf", "-inf" or null (= +inf).
double json_real(const nlohmann::json& j);
nlohmann::json real_to_json(double v);

}  // namespace fbd

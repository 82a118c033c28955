#pragma once

#include <string>

#include "json.hpp"

#include "livseg/ensemble/tree.hpp"

namespace livseg::ensemble {

using nlohmann::json;

json tree_to_json(const Tree& t);
Tree tree_from_json(const json& j);

/// Parses a model document and checks its format tag and version.
json parse_document(const std::string& text, const char* format);

} // namespace livseg::ensemble

#pragma once
// Canonical JSON: object keys sorted, no whitespace, doubles printed with 17
// significant digits, non-finite doubles as the strings "inf", "-inf", "nan".
// Parsing a canonical document and writing it again reproduces it byte for
// byte.

#include <string>

#include <json.hpp>

namespace evlab::cli {

using Json = nlohmann::json;

std::string canonical_dump(const Json& value);

/// A double as a JSON value, mapping non-finite values to strings.
Json number(double x);

}  // namespace evlab::cli

#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "hlc/forms.hpp"

namespace hlc {

struct SystemDocument {
    FormSystem system;
    std::optional<Box> box;
};

// Parses a polynomial expression such as "x1^2 + 3*x1*x2 - 7" in n variables.
// n = 0 infers the variable count from the largest index used.
IntegerForm parse_polynomial(std::string_view text, int n = 0, int degree = -1);

// System document (JSON): {"n", "d", "R", "forms": [...], "box": [[a,b],...]}.
// Each form is either a list of {"exponents": [...], "coeff": int} or an
// expression string.
SystemDocument parse_system(std::string_view text);
SystemDocument system_from_json(const nlohmann::json& doc);

// Byte-stable canonical form: sorted keys, terms in exponent order.
nlohmann::json to_json(const FormSystem& F);
nlohmann::json to_json(const Box& box);
std::string canonical_text(const SystemDocument& doc);

// Convenience for tests and fixtures.
FormSystem make_system(std::initializer_list<std::string_view> forms, int n = 0);

} // namespace hlc

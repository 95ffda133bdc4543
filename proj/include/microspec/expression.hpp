#pragma once

#include <functional>
#include <string>

namespace microspec {

/// Compiles an arithmetic expression in the chart coordinates t and x.
/// Supports numbers, t, x, + - * /, parentheses, exp(a) and pow(a, b).
/// Throws ConfigError with the offending column on a parse failure.
std::function<double(double t, double x)> compile_expression(const std::string& text);

}  // namespace microspec

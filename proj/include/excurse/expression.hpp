#pragma once

#include <memory>
#include <string>

namespace excurse {

/// Value and first derivative carried together (forward-mode dual number).
struct Dual {
    double value = 0.0;
    double derivative = 0.0;
};

/// Scalar expression in one variable, parsed from text.
///
/// Grammar: numbers, the variable (any one of s, t, r), the constant pi,
/// binary + - * / and ^, unary minus, parentheses, and the functions
/// exp, log, sin, cos, sqrt and pow(a, b).
class Expression {
public:
    /// Throws DomainError with the offending position on a syntax error.
    static Expression parse(const std::string& text);

    double operator()(double x) const { return eval(x).value; }
    double derivative(double x) const { return eval(x).derivative; }
    Dual eval(double x) const;

    const std::string& text() const { return text_; }
    /// The variable name used in the text, or '\0' for constants.
    char variable() const { return variable_; }

    struct Node;

private:
    std::string text_;
    char variable_ = '\0';
    std::shared_ptr<const Node> root_;
};

}  // namespace excurse

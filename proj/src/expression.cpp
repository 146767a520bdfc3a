#include "excurse/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <vector>

#include "excurse/error.hpp"

namespace excurse {

enum class Op { Constant, Variable, Add, Sub, Mul, Div, Pow, Neg, Exp, Log, Sin, Cos, Sqrt };

struct Expression::Node {
    Op op = Op::Constant;
    double constant = 0.0;
    std::shared_ptr<const Node> lhs, rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

NodePtr make(Op op, NodePtr lhs = nullptr, NodePtr rhs = nullptr, double c = 0.0) {
    auto n = std::make_shared<Expression::Node>();
    n->op = op;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    n->constant = c;
    return n;
}

class Parser {
public:
    explicit Parser(const std::string& text) : s_(text) {}

    NodePtr parse() {
        NodePtr n = expression();
        skip();
        if (pos_ != s_.size()) fail("unexpected character");
        return n;
    }

    char variable = '\0';

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw DomainError("expression '" + s_ + "': " + what + " at position " + std::to_string(pos_));
    }
    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }

    NodePtr expression() {
        NodePtr n = term();
        for (;;) {
            if (accept('+')) n = make(Op::Add, n, term());
            else if (accept('-')) n = make(Op::Sub, n, term());
            else return n;
        }
    }
    NodePtr term() {
        NodePtr n = unary();
        for (;;) {
            if (accept('*')) n = make(Op::Mul, n, unary());
            else if (accept('/')) n = make(Op::Div, n, unary());
            else return n;
        }
    }
    NodePtr unary() {
        if (accept('-')) return make(Op::Neg, unary());
        if (accept('+')) return unary();
        return power();
    }
    NodePtr power() {
        NodePtr base = primary();
        if (accept('^')) return make(Op::Pow, base, unary());
        return base;
    }
    NodePtr primary() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end of input");
        if (accept('(')) {
            NodePtr n = expression();
            expect(')');
            return n;
        }
        const char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = s_.c_str() + pos_;
            char* end = nullptr;
            const double v = std::strtod(begin, &end);
            if (end == begin) fail("malformed number");
            pos_ += static_cast<std::size_t>(end - begin);
            return make(Op::Constant, nullptr, nullptr, v);
        }
        if (!std::isalpha(static_cast<unsigned char>(c))) fail("unexpected character");
        std::string name;
        while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) name += s_[pos_++];
        if (name == "s" || name == "t" || name == "r") {
            if (variable != '\0' && variable != name[0]) fail("more than one variable");
            variable = name[0];
            return make(Op::Variable);
        }
        if (name == "pi") return make(Op::Constant, nullptr, nullptr, std::numbers::pi);
        if (name == "pow") {
            expect('(');
            NodePtr a = expression();
            expect(',');
            NodePtr b = expression();
            expect(')');
            return make(Op::Pow, a, b);
        }
        Op op;
        if (name == "exp") op = Op::Exp;
        else if (name == "log") op = Op::Log;
        else if (name == "sin") op = Op::Sin;
        else if (name == "cos") op = Op::Cos;
        else if (name == "sqrt") op = Op::Sqrt;
        else fail("unknown identifier '" + name + "'");
        expect('(');
        NodePtr arg = expression();
        expect(')');
        return make(op, arg);
    }

    std::string s_;
    std::size_t pos_ = 0;
};

bool is_constant(const Expression::Node& n) { return n.op == Op::Constant; }

Dual evaluate(const Expression::Node& n, double x) {
    switch (n.op) {
        case Op::Constant: return {n.constant, 0.0};
        case Op::Variable: return {x, 1.0};
        case Op::Neg: {
            const Dual a = evaluate(*n.lhs, x);
            return {-a.value, -a.derivative};
        }
        case Op::Exp: {
            const Dual a = evaluate(*n.lhs, x);
            const double e = std::exp(a.value);
            return {e, e * a.derivative};
        }
        case Op::Log: {
            const Dual a = evaluate(*n.lhs, x);
            return {std::log(a.value), a.derivative / a.value};
        }
        case Op::Sin: {
            const Dual a = evaluate(*n.lhs, x);
            return {std::sin(a.value), std::cos(a.value) * a.derivative};
        }
        case Op::Cos: {
            const Dual a = evaluate(*n.lhs, x);
            return {std::cos(a.value), -std::sin(a.value) * a.derivative};
        }
        case Op::Sqrt: {
            const Dual a = evaluate(*n.lhs, x);
            const double r = std::sqrt(a.value);
            return {r, a.derivative == 0.0 ? 0.0 : 0.5 * a.derivative / r};
        }
        default: break;
    }
    const Dual a = evaluate(*n.lhs, x);
    const Dual b = evaluate(*n.rhs, x);
    switch (n.op) {
        case Op::Add: return {a.value + b.value, a.derivative + b.derivative};
        case Op::Sub: return {a.value - b.value, a.derivative - b.derivative};
        case Op::Mul: return {a.value * b.value, a.derivative * b.value + a.value * b.derivative};
        case Op::Div:
            return {a.value / b.value, (a.derivative * b.value - a.value * b.derivative) / (b.value * b.value)};
        case Op::Pow: {
            if (is_constant(*n.rhs)) {
                // Integer and real constant exponents: d(a^p) = p a^(p-1) da.
                const double p = b.value;
                const double v = std::pow(a.value, p);
                const double d = (a.derivative == 0.0) ? 0.0 : p * std::pow(a.value, p - 1.0) * a.derivative;
                return {v, d};
            }
            const double v = std::pow(a.value, b.value);
            const double d = v * (b.derivative * std::log(a.value) + b.value * a.derivative / a.value);
            return {v, d};
        }
        default: throw Error("expression: corrupt node");
    }
}

}  // namespace

Expression Expression::parse(const std::string& text) {
    Parser p(text);
    Expression e;
    e.root_ = p.parse();
    e.text_ = text;
    e.variable_ = p.variable;
    return e;
}

Dual Expression::eval(double x) const {
    if (!root_) throw Error("expression: evaluating an empty expression");
    return evaluate(*root_, x);
}

}  // namespace excurse

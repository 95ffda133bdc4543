#include "microspec/expression.hpp"

#include <cctype>
#include <cmath>
#include <memory>

#include "microspec/errors.hpp"

namespace microspec {

namespace {

using Fn = std::function<double(double, double)>;

class Parser {
public:
    explicit Parser(const std::string& s) : s_(s) {}

    Fn parse() {
        Fn f = expr();
        skip();
        if (pos_ != s_.size())
            fail("unexpected trailing input");
        return f;
    }

private:
    const std::string& s_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError("expression '" + s_ + "': " + what + " at column " + std::to_string(pos_ + 1));
    }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
            ++pos_;
    }

    bool eat(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    Fn expr() {
        Fn lhs = term();
        for (;;) {
            if (eat('+')) {
                Fn rhs = term();
                lhs = [lhs, rhs](double t, double x) { return lhs(t, x) + rhs(t, x); };
            } else if (eat('-')) {
                Fn rhs = term();
                lhs = [lhs, rhs](double t, double x) { return lhs(t, x) - rhs(t, x); };
            } else {
                return lhs;
            }
        }
    }

    Fn term() {
        Fn lhs = unary();
        for (;;) {
            if (eat('*')) {
                Fn rhs = unary();
                lhs = [lhs, rhs](double t, double x) { return lhs(t, x) * rhs(t, x); };
            } else if (eat('/')) {
                Fn rhs = unary();
                lhs = [lhs, rhs](double t, double x) { return lhs(t, x) / rhs(t, x); };
            } else {
                return lhs;
            }
        }
    }

    Fn unary() {
        if (eat('-')) {
            Fn f = unary();
            return [f](double t, double x) { return -f(t, x); };
        }
        if (eat('+'))
            return unary();
        return primary();
    }

    Fn primary() {
        skip();
        if (pos_ >= s_.size())
            fail("unexpected end of input");
        if (eat('(')) {
            Fn f = expr();
            if (!eat(')'))
                fail("expected ')'");
            return f;
        }
        const char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(s_.substr(pos_), &used);
            } catch (const std::exception&) {
                fail("malformed number");
            }
            pos_ += used;
            return [v](double, double) { return v; };
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            const std::size_t start = pos_;
            while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_])))
                ++pos_;
            const std::string name = s_.substr(start, pos_ - start);
            if (name == "t")
                return [](double t, double) { return t; };
            if (name == "x")
                return [](double, double x) { return x; };
            if (name == "exp") {
                if (!eat('('))
                    fail("expected '(' after exp");
                Fn a = expr();
                if (!eat(')'))
                    fail("expected ')'");
                return [a](double t, double x) { return std::exp(a(t, x)); };
            }
            if (name == "pow") {
                if (!eat('('))
                    fail("expected '(' after pow");
                Fn a = expr();
                if (!eat(','))
                    fail("expected ','");
                Fn b = expr();
                if (!eat(')'))
                    fail("expected ')'");
                return [a, b](double t, double x) { return std::pow(a(t, x), b(t, x)); };
            }
            pos_ = start;
            fail("unknown identifier '" + name + "'");
        }
        fail(std::string("unexpected character '") + c + "'");
    }
};

}  // namespace

std::function<double(double, double)> compile_expression(const std::string& text) {
    return Parser(text).parse();
}

}  // namespace microspec

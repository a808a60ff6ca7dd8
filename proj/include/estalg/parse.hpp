#pragma once

#include <cctype>
#include <cstdint>
#include <string>

#include "estalg/chart.hpp"
#include "estalg/errors.hpp"
#include "estalg/expr.hpp"

namespace estalg {

namespace detail {

/// Recursive-descent parser for the plain-text infix grammar used by CLI
/// configs: sin, cos, exp, log, tanh, ^ (integer exponents), * / + -,
/// chart coordinate names, pi, decimal literals.
class Parser {
  public:
    Parser(const std::string& text, const Chart& chart) : s_(text), chart_(chart) {}

    Expr parse() {
        Expr e = parse_sum();
        skip_ws();
        if (pos_ != s_.size()) fail("unexpected trailing input");
        return simplify(e);
    }

  private:
    Expr parse_sum() {
        Expr e = parse_term();
        for (;;) {
            skip_ws();
            if (accept('+')) {
                e = e + parse_term();
            } else if (accept('-')) {
                e = e - parse_term();
            } else {
                return e;
            }
        }
    }

    Expr parse_term() {
        Expr e = parse_unary();
        for (;;) {
            skip_ws();
            if (accept('*')) {
                e = e * parse_unary();
            } else if (accept('/')) {
                e = e / parse_unary();
            } else {
                return e;
            }
        }
    }

    Expr parse_unary() {
        skip_ws();
        if (accept('-')) return -parse_unary();
        return parse_power();
    }

    Expr parse_power() {
        Expr base = parse_atom();
        skip_ws();
        if (accept('^')) {
            skip_ws();
            const bool neg = accept('-');
            skip_ws();
            if (pos_ >= s_.size() || !std::isdigit(byte(pos_))) fail("expected integer exponent after '^'");
            long e = 0;
            while (pos_ < s_.size() && std::isdigit(byte(pos_))) {
                e = e * 10 + (s_[pos_] - '0');
                if (e > 1000) fail("exponent too large");
                ++pos_;
            }
            return pow(base, int(neg ? -e : e));
        }
        return base;
    }

    Expr parse_atom() {
        skip_ws();
        if (pos_ >= s_.size()) fail("unexpected end of expression");
        if (accept('(')) {
            Expr e = parse_sum();
            expect(')');
            return e;
        }
        if (std::isdigit(byte(pos_)) || s_[pos_] == '.') return parse_number();
        if (std::isalpha(byte(pos_)) || s_[pos_] == '_') return parse_name();
        fail(std::string("unexpected character '") + s_[pos_] + "'");
        return Expr(0);
    }

    Expr parse_number() {
        const std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isdigit(byte(pos_)) || s_[pos_] == '.')) ++pos_;
        bool scientific = false;
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            scientific = true;
            ++pos_;
            if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
            while (pos_ < s_.size() && std::isdigit(byte(pos_))) ++pos_;
        }
        const std::string tok = s_.substr(start, pos_ - start);
        if (scientific) return Expr(Number::from_double(std::stod(tok)));
        // Finite decimals stay exact: "0.25" -> 1/4.
        const auto dot = tok.find('.');
        try {
            if (dot == std::string::npos) return Expr(Number(std::int64_t(std::stoll(tok))));
            const std::string digits = tok.substr(0, dot) + tok.substr(dot + 1);
            const std::size_t frac = tok.size() - dot - 1;
            if (digits.size() <= 17 && frac <= 17) {
                std::int64_t num = digits.empty() ? 0 : std::stoll(digits);
                std::int64_t den = 1;
                for (std::size_t i = 0; i < frac; ++i) den *= 10;
                return Expr(Number::rational(num, den));
            }
        } catch (const std::out_of_range&) {
        }
        return Expr(Number::from_double(std::stod(tok)));
    }

    Expr parse_name() {
        const std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isalnum(byte(pos_)) || s_[pos_] == '_')) ++pos_;
        const std::string name = s_.substr(start, pos_ - start);
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == '(') {
            ++pos_;
            Expr u = parse_sum();
            expect(')');
            if (name == "sin") return sin(u);
            if (name == "cos") return cos(u);
            if (name == "exp") return exp(u);
            if (name == "log") return log(u);
            if (name == "tanh") return Expr(1) - Expr(2) / (exp(Expr(2) * u) + Expr(1));
            fail("unknown function: " + name);
        }
        if (name == "pi") return Expr(Number::from_double(kPi));
        try {
            return chart_.coord_expr(name);
        } catch (const ConfigError&) {
            fail("unknown symbol: " + name);
        }
        return Expr(0);
    }

    unsigned char byte(std::size_t i) const { return static_cast<unsigned char>(s_[i]); }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(byte(pos_))) ++pos_;
    }

    bool accept(char c) {
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        skip_ws();
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }

    [[noreturn]] void fail(const std::string& why) const {
        throw ConfigError("parse error at position " + std::to_string(pos_) + " in \"" + s_ +
                          "\": " + why);
    }

    const std::string& s_;
    const Chart& chart_;
    std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses an infix expression literal over the chart's coordinates.
inline Expr parse_expr(const std::string& text, const Chart& chart) {
    detail::Parser p(text, chart);
    return p.parse();
}

}  // namespace estalg

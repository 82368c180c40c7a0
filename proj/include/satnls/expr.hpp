/**
 * @file expr.hpp
 * @brief Tiny arithmetic expressions over the coordinates, used for source
 *        shapes in config files: numbers, x, y, pi, + - * / ^ (right
 *        associative), parentheses and a fixed set of one-argument
 *        functions. Parse errors carry the character position.
 */

#pragma once

#include <cctype>
#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace satnls {

class ExprError : public std::runtime_error {
public:
    ExprError(const std::string& what, size_t pos)
        : std::runtime_error(what + " (at position " + std::to_string(pos) + ")"),
          position(pos) {}
    size_t position;
};

class Expression {
public:
    Expression() = default;

    static Expression parse(const std::string& text) {
        Parser p{text, 0};
        Expression e;
        e.root_ = p.parse_sum();
        p.skip_ws();
        if (p.pos != text.size())
            throw ExprError("unexpected trailing input", p.pos);
        e.source_ = text;
        return e;
    }

    double eval(double x, double y = 0.0) const {
        if (!root_) throw std::logic_error("Expression: eval on empty expression");
        return root_->eval(x, y);
    }

    bool empty() const { return root_ == nullptr; }
    const std::string& source() const { return source_; }

private:
    struct Node {
        virtual ~Node() = default;
        virtual double eval(double x, double y) const = 0;
    };
    using NodePtr = std::shared_ptr<const Node>;

    struct Constant : Node {
        double value;
        explicit Constant(double v) : value(v) {}
        double eval(double, double) const override { return value; }
    };
    struct Coord : Node {
        bool is_x;
        explicit Coord(bool x) : is_x(x) {}
        double eval(double x, double y) const override { return is_x ? x : y; }
    };
    struct Unary : Node {
        double (*fn)(double);
        NodePtr arg;
        Unary(double (*f)(double), NodePtr a) : fn(f), arg(std::move(a)) {}
        double eval(double x, double y) const override { return fn(arg->eval(x, y)); }
    };
    struct Binary : Node {
        char op;
        NodePtr lhs, rhs;
        Binary(char o, NodePtr l, NodePtr r) : op(o), lhs(std::move(l)), rhs(std::move(r)) {}
        double eval(double x, double y) const override {
            const double a = lhs->eval(x, y), b = rhs->eval(x, y);
            switch (op) {
                case '+': return a + b;
                case '-': return a - b;
                case '*': return a * b;
                case '/': return a / b;
                default: return std::pow(a, b);
            }
        }
    };

    struct Parser {
        const std::string& text;
        size_t pos;

        void skip_ws() {
            while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
                ++pos;
        }
        bool accept(char c) {
            skip_ws();
            if (pos < text.size() && text[pos] == c) { ++pos; return true; }
            return false;
        }

        NodePtr parse_sum() {
            NodePtr lhs = parse_product();
            while (true) {
                if (accept('+')) lhs = std::make_shared<Binary>('+', lhs, parse_product());
                else if (accept('-')) lhs = std::make_shared<Binary>('-', lhs, parse_product());
                else return lhs;
            }
        }
        NodePtr parse_product() {
            NodePtr lhs = parse_unary();
            while (true) {
                if (accept('*')) lhs = std::make_shared<Binary>('*', lhs, parse_unary());
                else if (accept('/')) lhs = std::make_shared<Binary>('/', lhs, parse_unary());
                else return lhs;
            }
        }
        // unary minus binds looser than '^' (so -x^2 is -(x^2)) but the
        // exponent itself may be signed (2^-3)
        NodePtr parse_unary() {
            if (accept('-')) {
                NodePtr a = parse_unary();
                return std::make_shared<Binary>('-', std::make_shared<Constant>(0.0), a);
            }
            return parse_power();
        }
        NodePtr parse_power() {
            NodePtr base = parse_primary();
            if (accept('^'))
                return std::make_shared<Binary>('^', base, parse_unary());
            return base;
        }
        NodePtr parse_primary() {
            skip_ws();
            if (pos >= text.size()) throw ExprError("unexpected end of expression", pos);
            const char c = text[pos];
            if (c == '(') {
                ++pos;
                NodePtr e = parse_sum();
                if (!accept(')')) throw ExprError("missing ')'", pos);
                return e;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
            if (std::isalpha(static_cast<unsigned char>(c))) return parse_ident();
            throw ExprError(std::string("unexpected character '") + c + "'", pos);
        }
        NodePtr parse_number() {
            size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(text.substr(pos), &used);
            } catch (const std::exception&) {
                throw ExprError("malformed number", pos);
            }
            pos += used;
            return std::make_shared<Constant>(v);
        }
        NodePtr parse_ident() {
            const size_t start = pos;
            while (pos < text.size() &&
                   (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
                ++pos;
            const std::string name = text.substr(start, pos - start);
            if (name == "x") return std::make_shared<Coord>(true);
            if (name == "y") return std::make_shared<Coord>(false);
            if (name == "pi") return std::make_shared<Constant>(3.14159265358979323846);
            static const std::pair<const char*, double (*)(double)> fns[] = {
                {"sin", std::sin},   {"cos", std::cos},   {"tan", std::tan},
                {"exp", std::exp},   {"log", std::log},   {"sqrt", std::sqrt},
                {"abs", std::fabs},  {"tanh", std::tanh}, {"sinh", std::sinh},
                {"cosh", std::cosh},
            };
            for (const auto& [fname, fptr] : fns) {
                if (name == fname) {
                    if (!accept('('))
                        throw ExprError("function '" + name + "' needs '('", pos);
                    NodePtr a = parse_sum();
                    if (!accept(')')) throw ExprError("missing ')'", pos);
                    return std::make_shared<Unary>(fptr, a);
                }
            }
            throw ExprError("unknown identifier '" + name + "'", start);
        }
    };

    NodePtr root_;
    std::string source_;
};

} // namespace satnls

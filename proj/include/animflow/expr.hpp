#pragma once

#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "animflow/value.hpp"

namespace animflow {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

enum class UnaryOp
{
    Not,
    Negate
};

enum class BinaryOp
{
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Lte,
    Gt,
    Gte,
    Eq,
    Neq,
    And,
    Or
};

struct Literal
{
    Value value;
};

struct Identifier
{
    std::string name;
};

struct Unary
{
    UnaryOp op;
    ExprPtr operand;
};

struct Binary
{
    BinaryOp op;
    ExprPtr lhs;
    ExprPtr rhs;
};

struct Expr
{
    std::variant<Literal, Identifier, Unary, Binary> node;
    std::size_t offset = 0;
};

inline const char* symbol(BinaryOp op)
{
    switch (op) {
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "/";
    case BinaryOp::Lt: return "<";
    case BinaryOp::Lte: return "<=";
    case BinaryOp::Gt: return ">";
    case BinaryOp::Gte: return ">=";
    case BinaryOp::Eq: return "==";
    case BinaryOp::Neq: return "!=";
    case BinaryOp::And: return "&&";
    case BinaryOp::Or: return "||";
    }
    return "?";
}

namespace detail {

class ExprParser
{
public:
    explicit ExprParser(std::string_view text) : text_(text) {}

    ExprPtr parse()
    {
        skip_ws();
        if (pos_ == text_.size()) {
            throw SyntaxError("empty expression", pos_);
        }
        auto e = parse_or();
        skip_ws();
        if (pos_ != text_.size()) {
            throw SyntaxError("unexpected '" + std::string(1, text_[pos_]) + "'", pos_);
        }
        return e;
    }

private:
    static ExprPtr make(std::size_t at, auto node)
    {
        return std::make_shared<const Expr>(Expr{std::move(node), at});
    }

    void skip_ws()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
    }

    bool accept(std::string_view tok)
    {
        skip_ws();
        if (text_.substr(pos_, tok.size()) == tok) {
            pos_ += tok.size();
            return true;
        }
        return false;
    }

    // Matches a comparison operator without consuming a longer one.
    bool accept_cmp(std::string_view tok)
    {
        skip_ws();
        if (text_.substr(pos_, tok.size()) != tok) {
            return false;
        }
        if (tok.size() == 1 && pos_ + 1 < text_.size() && text_[pos_ + 1] == '=') {
            return false;
        }
        pos_ += tok.size();
        return true;
    }

    ExprPtr parse_or()
    {
        auto lhs = parse_and();
        for (;;) {
            std::size_t at = pos_;
            if (!accept("||")) return lhs;
            lhs = make(at, Binary{BinaryOp::Or, lhs, parse_and()});
        }
    }

    ExprPtr parse_and()
    {
        auto lhs = parse_cmp();
        for (;;) {
            std::size_t at = pos_;
            if (!accept("&&")) return lhs;
            lhs = make(at, Binary{BinaryOp::And, lhs, parse_cmp()});
        }
    }

    ExprPtr parse_cmp()
    {
        auto lhs = parse_add();
        for (;;) {
            skip_ws();
            std::size_t at = pos_;
            BinaryOp op;
            if (accept("<=")) op = BinaryOp::Lte;
            else if (accept(">=")) op = BinaryOp::Gte;
            else if (accept("==")) op = BinaryOp::Eq;
            else if (accept("!=")) op = BinaryOp::Neq;
            else if (accept_cmp("<")) op = BinaryOp::Lt;
            else if (accept_cmp(">")) op = BinaryOp::Gt;
            else return lhs;
            lhs = make(at, Binary{op, lhs, parse_add()});
        }
    }

    ExprPtr parse_add()
    {
        auto lhs = parse_mul();
        for (;;) {
            skip_ws();
            std::size_t at = pos_;
            BinaryOp op;
            if (accept("+")) op = BinaryOp::Add;
            else if (accept("-")) op = BinaryOp::Sub;
            else return lhs;
            lhs = make(at, Binary{op, lhs, parse_mul()});
        }
    }

    ExprPtr parse_mul()
    {
        auto lhs = parse_unary();
        for (;;) {
            skip_ws();
            std::size_t at = pos_;
            BinaryOp op;
            if (accept("*")) op = BinaryOp::Mul;
            else if (accept("/")) op = BinaryOp::Div;
            else return lhs;
            lhs = make(at, Binary{op, lhs, parse_unary()});
        }
    }

    ExprPtr parse_unary()
    {
        skip_ws();
        std::size_t at = pos_;
        if (accept_cmp("!")) {
            return make(at, Unary{UnaryOp::Not, parse_unary()});
        }
        if (accept("-")) {
            return make(at, Unary{UnaryOp::Negate, parse_unary()});
        }
        return parse_primary();
    }

    ExprPtr parse_primary()
    {
        skip_ws();
        std::size_t at = pos_;
        if (pos_ >= text_.size()) {
            throw SyntaxError("unexpected end of expression", pos_);
        }
        char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            auto inner = parse_or();
            if (!accept(")")) {
                throw SyntaxError("expected ')'", pos_);
            }
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t end = pos_;
            while (end < text_.size()
                   && (std::isdigit(static_cast<unsigned char>(text_[end])) || text_[end] == '.')) {
                ++end;
            }
            if (end < text_.size() && (text_[end] == 'e' || text_[end] == 'E')) {
                std::size_t exp = end + 1;
                if (exp < text_.size() && (text_[exp] == '+' || text_[exp] == '-')) ++exp;
                if (exp < text_.size() && std::isdigit(static_cast<unsigned char>(text_[exp]))) {
                    end = exp;
                    while (end < text_.size() && std::isdigit(static_cast<unsigned char>(text_[end]))) {
                        ++end;
                    }
                }
            }
            double v = 0;
            auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + end, v);
            if (ec != std::errc() || ptr != text_.data() + end) {
                throw SyntaxError("malformed number", pos_);
            }
            pos_ = end;
            return make(at, Literal{Value(v)});
        }
        if (c == '"' || c == '\'') {
            std::string s;
            ++pos_;
            while (pos_ < text_.size() && text_[pos_] != c) {
                if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) {
                    ++pos_;
                }
                s += text_[pos_++];
            }
            if (pos_ >= text_.size()) {
                throw SyntaxError("unterminated string", at);
            }
            ++pos_;
            return make(at, Literal{Value(std::move(s))});
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t end = pos_;
            while (end < text_.size()
                   && (std::isalnum(static_cast<unsigned char>(text_[end])) || text_[end] == '_')) {
                ++end;
            }
            std::string name(text_.substr(pos_, end - pos_));
            pos_ = end;
            if (name == "true") return make(at, Literal{Value(true)});
            if (name == "false") return make(at, Literal{Value(false)});
            if (name == "null") return make(at, Literal{Value()});
            return make(at, Identifier{std::move(name)});
        }
        throw SyntaxError("unexpected '" + std::string(1, c) + "'", pos_);
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

} // namespace detail

inline ExprPtr parse_expression(std::string_view text)
{
    return detail::ExprParser(text).parse();
}

// Debug form, e.g. Sub(Ident(anim_value), Num(5)).
inline std::string to_sexpr(const Expr& e)
{
    struct Visitor
    {
        std::string operator()(const Literal& l) const
        {
            switch (l.value.kind()) {
            case ValueKind::Number: return "Num(" + format_number(l.value.as_number()) + ")";
            case ValueKind::String: return "Str(" + l.value.as_string() + ")";
            case ValueKind::Boolean: return std::string("Bool(") + (l.value.as_bool() ? "true" : "false") + ")";
            default: return "Null";
            }
        }
        std::string operator()(const Identifier& i) const { return "Ident(" + i.name + ")"; }
        std::string operator()(const Unary& u) const
        {
            return std::string(u.op == UnaryOp::Not ? "Not(" : "Neg(") + to_sexpr(*u.operand) + ")";
        }
        std::string operator()(const Binary& b) const
        {
            static const char* names[] = {"Add", "Sub", "Mul", "Div", "Lt",  "Lte",
                                          "Gt",  "Gte", "Eq",  "Neq", "And", "Or"};
            return std::string(names[static_cast<int>(b.op)]) + "(" + to_sexpr(*b.lhs) + ", "
                   + to_sexpr(*b.rhs) + ")";
        }
    };
    return std::visit(Visitor{}, e.node);
}

inline void collect_identifiers(const Expr& e, std::set<std::string>& out)
{
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Identifier>) {
                out.insert(n.name);
            } else if constexpr (std::is_same_v<T, Unary>) {
                collect_identifiers(*n.operand, out);
            } else if constexpr (std::is_same_v<T, Binary>) {
                collect_identifiers(*n.lhs, out);
                collect_identifiers(*n.rhs, out);
            }
        },
        e.node);
}

inline std::set<std::string> free_identifiers(const Expr& e)
{
    std::set<std::string> out;
    collect_identifiers(e, out);
    return out;
}

// Resolves an identifier to a value; returns nullptr when unbound.
using Resolver = std::function<const Value*(std::string_view)>;

using Env = std::map<std::string, Value, std::less<>>;

namespace detail {

inline Value arithmetic(BinaryOp op, const Value& a, const Value& b)
{
    if (!a.is_numeric() || !b.is_numeric()) {
        throw TypeError(std::string("operator ") + symbol(op) + " needs numeric operands, got "
                        + to_string(a.kind()) + " and " + to_string(b.kind()));
    }
    double x = a.as_number();
    double y = b.as_number();
    double r = 0;
    switch (op) {
    case BinaryOp::Add: r = x + y; break;
    case BinaryOp::Sub: r = x - y; break;
    case BinaryOp::Mul: r = x * y; break;
    case BinaryOp::Div: r = x / y; break;
    default: break;
    }
    bool ta = a.is_timestamp();
    bool tb = b.is_timestamp();
    // timestamp +/- number stays a timestamp; timestamp - timestamp is a duration.
    if ((op == BinaryOp::Add && ta != tb) || (op == BinaryOp::Sub && ta && !tb)) {
        return Value(Timestamp{r});
    }
    return Value(r);
}

inline Value evaluate(const Expr& e, const Resolver& resolve)
{
    struct Visitor
    {
        const Resolver& resolve;

        Value operator()(const Literal& l) const { return l.value; }

        Value operator()(const Identifier& i) const
        {
            if (const Value* v = resolve(i.name)) {
                return *v;
            }
            throw EvalError("unbound identifier \"" + i.name + "\"");
        }

        Value operator()(const Unary& u) const
        {
            Value v = evaluate(*u.operand, resolve);
            if (u.op == UnaryOp::Not) {
                return Value(!v.as_bool());
            }
            if (!v.is_number()) {
                throw TypeError(std::string("cannot negate ") + to_string(v.kind()));
            }
            return Value(-v.as_number());
        }

        Value operator()(const Binary& b) const
        {
            if (b.op == BinaryOp::And || b.op == BinaryOp::Or) {
                bool lhs = evaluate(*b.lhs, resolve).as_bool();
                if (b.op == BinaryOp::And ? !lhs : lhs) {
                    return Value(lhs);
                }
                return Value(evaluate(*b.rhs, resolve).as_bool());
            }
            Value lhs = evaluate(*b.lhs, resolve);
            Value rhs = evaluate(*b.rhs, resolve);
            switch (b.op) {
            case BinaryOp::Add:
            case BinaryOp::Sub:
            case BinaryOp::Mul:
            case BinaryOp::Div: return arithmetic(b.op, lhs, rhs);
            default: break;
            }
            // Comparisons involving null never hold (null == null excepted).
            if (lhs.is_null() || rhs.is_null()) {
                bool both = lhs.is_null() && rhs.is_null();
                if (b.op == BinaryOp::Eq) return Value(both);
                if (b.op == BinaryOp::Neq) return Value(!both);
                return Value(false);
            }
            auto c = compare_values(lhs, rhs);
            switch (b.op) {
            case BinaryOp::Lt: return Value(c < 0);
            case BinaryOp::Lte: return Value(c <= 0);
            case BinaryOp::Gt: return Value(c > 0);
            case BinaryOp::Gte: return Value(c >= 0);
            case BinaryOp::Eq: return Value(c == 0);
            case BinaryOp::Neq: return Value(c != 0);
            default: break;
            }
            return Value();
        }
    };
    return std::visit(Visitor{resolve}, e.node);
}

} // namespace detail

inline Value eval_expression(const Expr& e, const Resolver& resolve)
{
    return detail::evaluate(e, resolve);
}

inline Value eval_expression(const Expr& e, const Env& env)
{
    return detail::evaluate(e, [&env](std::string_view name) -> const Value* {
        auto it = env.find(name);
        return it == env.end() ? nullptr : &it->second;
    });
}

} // namespace animflow

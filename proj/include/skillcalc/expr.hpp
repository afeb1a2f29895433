#pragma once

#include <gmpxx.h>

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "skillcalc/errors.hpp"
#include "skillcalc/tokens.hpp"

namespace skillcalc {

using BigInt = mpz_class;

inline std::string render(const BigInt& v) { return v.get_str(); }

inline TokenSeq render_tokens(const BigInt& v) { return tokenize(render(v)); }

struct ExprAst;
using AstPtr = std::unique_ptr<ExprAst>;

struct ExprAst {
    enum class Kind { Literal, Binary };
    Kind kind;
    BigInt value;  // Literal
    Token op = 0;  // Binary: kPlus..kDivide
    AstPtr left, right;

    static AstPtr literal(BigInt v) {
        auto n = std::make_unique<ExprAst>();
        n->kind = Kind::Literal;
        n->value = std::move(v);
        return n;
    }
    static AstPtr binary(Token op, AstPtr l, AstPtr r) {
        auto n = std::make_unique<ExprAst>();
        n->kind = Kind::Binary;
        n->op = op;
        n->left = std::move(l);
        n->right = std::move(r);
        return n;
    }
};

namespace detail {

inline int precedence(Token op) { return (op == kTimes || op == kDivide) ? 2 : 1; }

class Parser {
public:
    explicit Parser(const TokenSeq& seq) : seq_(seq) {}

    AstPtr run() {
        if (seq_.empty()) throw SyntaxError(0, "empty expression");
        AstPtr e = expression();
        if (pos_ != seq_.size()) throw SyntaxError(pos_, "trailing input");
        return e;
    }

private:
    const TokenSeq& seq_;
    std::size_t pos_ = 0;

    bool done() const { return pos_ >= seq_.size(); }
    Token peek() const { return seq_[pos_]; }

    AstPtr expression() {
        AstPtr lhs = term();
        while (!done() && (peek() == kPlus || peek() == kMinus)) {
            Token op = seq_[pos_++];
            lhs = ExprAst::binary(op, std::move(lhs), term());
        }
        return lhs;
    }

    AstPtr term() {
        AstPtr lhs = factor();
        while (!done() && (peek() == kTimes || peek() == kDivide)) {
            Token op = seq_[pos_++];
            lhs = ExprAst::binary(op, std::move(lhs), factor());
        }
        return lhs;
    }

    AstPtr factor() {
        if (done()) throw SyntaxError(pos_, "expected operand");
        if (peek() == kLParen) {
            std::size_t open = pos_++;
            AstPtr inner = expression();
            if (done() || peek() != kRParen) throw SyntaxError(open, "unbalanced parenthesis");
            ++pos_;
            return inner;
        }
        if (!is_digit_token(peek())) throw SyntaxError(pos_, "expected operand");
        BigInt v = 0;
        while (!done() && is_digit_token(peek())) {
            v = v * 10 + static_cast<int>(seq_[pos_++]);
        }
        return ExprAst::literal(std::move(v));
    }
};

}  // namespace detail

inline AstPtr parse(const TokenSeq& seq) { return detail::Parser(seq).run(); }

inline AstPtr parse(const std::string& text) { return parse(tokenize(text)); }

inline BigInt evaluate(const ExprAst& ast) {
    if (ast.kind == ExprAst::Kind::Literal) return ast.value;
    BigInt l = evaluate(*ast.left);
    BigInt r = evaluate(*ast.right);
    switch (ast.op) {
        case kPlus: return l + r;
        case kMinus: return l - r;
        case kTimes: return l * r;
        case kDivide: {
            if (r == 0) throw DivisionByZero();
            if (l % r != 0) throw InexactDivision();
            return l / r;
        }
        default: throw SyntaxError(0, "bad operator in ast");
    }
}

// In-order serialization with minimal parentheses; parse(serialize(ast))
// reproduces the tree.
inline std::string serialize(const ExprAst& ast) {
    if (ast.kind == ExprAst::Kind::Literal) return render(ast.value);
    const int prec = detail::precedence(ast.op);
    auto wrap = [&](const ExprAst& child, bool right_side) {
        std::string s = serialize(child);
        if (child.kind == ExprAst::Kind::Literal) return s;
        const int cp = detail::precedence(child.op);
        // left-associative grammar: an unwrapped same-precedence right child
        // would re-associate on re-parse
        const bool need = cp < prec || (right_side && cp == prec);
        return need ? "(" + s + ")" : s;
    };
    return wrap(*ast.left, false) + token_to_char(ast.op) + wrap(*ast.right, true);
}

// Structurally independent oracle: shunting-yard evaluation without building
// an AST. Same contract as parse + evaluate.
inline BigInt evaluate_independent(const TokenSeq& seq) {
    if (seq.empty()) throw SyntaxError(0, "empty expression");
    std::vector<BigInt> values;
    std::vector<std::pair<Token, std::size_t>> ops;  // token, position

    auto apply = [&](Token op, std::size_t pos) {
        if (values.size() < 2) throw SyntaxError(pos, "dangling operator");
        BigInt r = std::move(values.back());
        values.pop_back();
        BigInt l = std::move(values.back());
        values.pop_back();
        switch (op) {
            case kPlus: values.push_back(l + r); break;
            case kMinus: values.push_back(l - r); break;
            case kTimes: values.push_back(l * r); break;
            case kDivide:
                if (r == 0) throw DivisionByZero();
                if (l % r != 0) throw InexactDivision();
                values.push_back(l / r);
                break;
            default: throw SyntaxError(pos, "bad operator");
        }
    };

    bool expect_operand = true;
    for (std::size_t i = 0; i < seq.size();) {
        Token t = seq[i];
        if (is_digit_token(t)) {
            if (!expect_operand) throw SyntaxError(i, "unexpected operand");
            BigInt v = 0;
            while (i < seq.size() && is_digit_token(seq[i])) v = v * 10 + static_cast<int>(seq[i++]);
            values.push_back(std::move(v));
            expect_operand = false;
            continue;
        }
        if (is_operator_token(t)) {
            if (expect_operand) throw SyntaxError(i, "dangling operator");
            while (!ops.empty() && ops.back().first != kLParen &&
                   detail::precedence(ops.back().first) >= detail::precedence(t)) {
                apply(ops.back().first, ops.back().second);
                ops.pop_back();
            }
            ops.emplace_back(t, i);
            expect_operand = true;
            ++i;
            continue;
        }
        if (t == kLParen) {
            if (!expect_operand) throw SyntaxError(i, "unexpected parenthesis");
            ops.emplace_back(t, i);
            ++i;
            continue;
        }
        if (t == kRParen) {
            if (expect_operand) throw SyntaxError(i, "empty operand");
            while (!ops.empty() && ops.back().first != kLParen) {
                apply(ops.back().first, ops.back().second);
                ops.pop_back();
            }
            if (ops.empty()) throw SyntaxError(i, "unbalanced parenthesis");
            ops.pop_back();
            ++i;
            continue;
        }
        throw SyntaxError(i, "blank inside expression");
    }
    if (expect_operand) throw SyntaxError(seq.size() ? seq.size() - 1 : 0, "dangling operator");
    while (!ops.empty()) {
        if (ops.back().first == kLParen) throw SyntaxError(ops.back().second, "unbalanced parenthesis");
        apply(ops.back().first, ops.back().second);
        ops.pop_back();
    }
    if (values.size() != 1) throw SyntaxError(0, "malformed expression");
    return values.front();
}

inline BigInt evaluate_independent(const std::string& text) {
    return evaluate_independent(tokenize(text));
}

}  // namespace skillcalc

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "skillcalc/errors.hpp"
#include "skillcalc/expr.hpp"
#include "skillcalc/rng.hpp"
#include "skillcalc/taskspec.hpp"
#include "skillcalc/tokens.hpp"

namespace skillcalc {

namespace detail {

inline BigInt random_operand(int min_digits, int max_digits, Rng& rng) {
    const int ndig = rng.range(min_digits, max_digits);
    std::string s;
    s += static_cast<char>('0' + (ndig == 1 ? rng.below(10) : 1 + rng.below(9)));
    for (int i = 1; i < ndig; ++i) s += static_cast<char>('0' + rng.below(10));
    return BigInt(s);
}

inline AstPtr random_ast(const TaskSpec& spec, int n_ops, Rng& rng) {
    if (n_ops == 0) {
        const int lo = spec.shape == OperandShape::Single ? 1 : spec.min_digits;
        const int hi = spec.shape == OperandShape::Single ? 1 : spec.max_digits;
        // expression leaves skew short so length-targeted sampling lands on
        // operator-rich strings
        int ndig = lo;
        while (ndig < hi && rng.chance(0.35)) ++ndig;
        return ExprAst::literal(random_operand(ndig, ndig, rng));
    }
    const char op = spec.ops[rng.below(spec.ops.size())];
    const int left = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_ops)));
    Token op_tok = op == '+' ? kPlus : op == '-' ? kMinus : op == '*' ? kTimes : kDivide;
    return ExprAst::binary(op_tok, random_ast(spec, left, rng),
                           random_ast(spec, n_ops - 1 - left, rng));
}

// Minimal-paren serialization plus optional no-op parens around binary subtrees.
inline std::string serialize_decorated(const ExprAst& ast, double paren_prob, Rng& rng) {
    if (ast.kind == ExprAst::Kind::Literal) return render(ast.value);
    const int prec = precedence(ast.op);
    auto wrap = [&](const ExprAst& child, bool right_side) {
        std::string s = serialize_decorated(child, paren_prob, rng);
        if (child.kind == ExprAst::Kind::Literal) return s;
        const int cp = precedence(child.op);
        bool need =
            cp < prec || (right_side && cp == prec && (ast.op == kMinus || ast.op == kDivide));
        if (!need && paren_prob > 0.0 && rng.chance(paren_prob)) need = true;
        return need ? "(" + s + ")" : s;
    };
    return wrap(*ast.left, false) + token_to_char(ast.op) + wrap(*ast.right, true);
}

}  // namespace detail

inline constexpr int kGenerationBudget = 10000;

inline Sample generate_sample(const TaskSpec& spec, Rng& rng) {
    if (!spec.valid()) throw UnsupportedTask(spec.id);
    if (spec.juxtaposed) {
        const int x = static_cast<int>(rng.below(10)), y = static_cast<int>(rng.below(10));
        Sample s;
        s.input = {static_cast<Token>(x), static_cast<Token>(y)};
        s.truth = render_tokens(BigInt(x + y));
        return s;
    }
    for (int attempt = 0; attempt < kGenerationBudget; ++attempt) {
        AstPtr ast;
        if (spec.min_ops == 1 && spec.max_ops == 1) {
            const int lo = spec.shape == OperandShape::Single ? 1 : spec.min_digits;
            const int hi = spec.shape == OperandShape::Single ? 1 : spec.max_digits;
            BigInt a = detail::random_operand(lo, hi, rng);
            BigInt b = right_operand_single(spec) ? detail::random_operand(1, 1, rng)
                                                  : detail::random_operand(lo, hi, rng);
            const char op = spec.ops[rng.below(spec.ops.size())];
            Token op_tok = op == '+' ? kPlus : op == '-' ? kMinus : op == '*' ? kTimes : kDivide;
            ast = ExprAst::binary(op_tok, ExprAst::literal(std::move(a)),
                                  ExprAst::literal(std::move(b)));
        } else {
            ast = detail::random_ast(spec, rng.range(spec.min_ops, spec.max_ops), rng);
        }
        const std::string text =
            detail::serialize_decorated(*ast, spec.parens ? spec.redundant_paren_prob : 0.0, rng);
        const int len = static_cast<int>(text.size());
        if (len < spec.min_len || len > spec.max_len) continue;
        if (!spec.parens && text.find('(') != std::string::npos) continue;
        BigInt value;
        try {
            value = evaluate(*ast);
        } catch (const DivisionByZero&) {
            continue;
        } catch (const InexactDivision&) {
            continue;
        }
        Sample s;
        s.input = tokenize(text);
        s.truth = render_tokens(value);
        return s;
    }
    throw GenerationExhausted(spec.id);
}

inline std::vector<Sample> generate_dataset(const TaskSpec& spec, std::size_t n, Rng& rng) {
    std::vector<Sample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(generate_sample(spec, rng));
    return out;
}

}  // namespace skillcalc

#pragma once

#include <string>

#include "skillcalc/errors.hpp"
#include "skillcalc/tokens.hpp"

namespace skillcalc {

enum class OperandShape { Single, Multi };

// Declarative description of a sample distribution: operator set, operand
// shape, serialized length range, operator-count range.
struct TaskSpec {
    std::string id;
    std::string ops = "+";  // canonical ASCII subset of "+-*/"
    bool parens = false;
    OperandShape shape = OperandShape::Single;
    int min_digits = 1, max_digits = 3;  // per operand, Multi shape
    int min_ops = 1, max_ops = 1;
    int min_len = 1, max_len = 64;
    double redundant_paren_prob = 0.0;  // chance of wrapping a subtree in no-op parens
    bool juxtaposed = false;            // "xy" -> x+y, digit-pair sum without operator

    bool valid() const {
        if (ops.empty() && !juxtaposed) return false;
        for (char c : ops)
            if (c != '+' && c != '-' && c != '*' && c != '/') return false;
        if (min_digits < 1 || max_digits < min_digits) return false;
        if (min_ops < 1 || max_ops < min_ops) return false;
        if (min_len < 1 || max_len < min_len) return false;
        return true;
    }
};

struct Sample {
    TokenSeq input;
    TokenSeq truth;
};

namespace detail {

inline TaskSpec single_op(std::string id, char op, OperandShape shape, int max_digits) {
    TaskSpec s;
    s.id = std::move(id);
    s.ops = std::string(1, op);
    s.shape = shape;
    s.max_digits = shape == OperandShape::Single ? 1 : max_digits;
    s.min_ops = s.max_ops = 1;
    s.max_len = 2 * (s.max_digits > 1 ? s.max_digits : 1) + 1;
    return s;
}

inline TaskSpec expr_task(std::string id, std::string ops, bool parens) {
    TaskSpec s;
    s.id = std::move(id);
    s.ops = std::move(ops);
    s.parens = parens;
    s.shape = OperandShape::Multi;
    s.min_digits = 1;
    s.max_digits = 3;
    s.min_ops = 1;
    s.max_ops = 6;
    s.min_len = 3;
    s.max_len = 20;
    if (parens) s.redundant_paren_prob = 0.15;
    return s;
}

}  // namespace detail

// Canonical task inventory; names are case-insensitive and accept the display
// forms of × and ÷.
inline TaskSpec builtin_task(const std::string& name) {
    std::string key;
    for (std::size_t i = 0; i < name.size(); ++i) {
        unsigned char c = name[i];
        if (c == 0xC3 && i + 1 < name.size()) {
            unsigned char d = name[++i];
            if (d == 0x97) { key += '*'; continue; }
            if (d == 0xB7) { key += '/'; continue; }
            throw UnsupportedTask(name);
        }
        key += static_cast<char>(c >= 'a' && c <= 'z' ? c - 32 : c);
    }
    using detail::expr_task;
    using detail::single_op;
    if (key == "S+S") return single_op("S+S", '+', OperandShape::Single, 1);
    if (key == "S-S") return single_op("S-S", '-', OperandShape::Single, 1);
    if (key == "S*S") return single_op("S*S", '*', OperandShape::Single, 1);
    if (key == "SS+") {
        TaskSpec s;
        s.id = "SS+";
        s.ops.clear();
        s.juxtaposed = true;
        s.min_ops = s.max_ops = 1;
        s.min_len = s.max_len = 2;
        return s;
    }
    if (key == "M+M") return single_op("M+M", '+', OperandShape::Multi, 3);
    if (key == "M-M") return single_op("M-M", '-', OperandShape::Multi, 3);
    if (key == "M*S") {
        TaskSpec s = single_op("M*S", '*', OperandShape::Multi, 3);
        s.min_digits = 1;  // right operand forced single-digit by generator for *S / /S ids
        return s;
    }
    if (key == "M*M") return single_op("M*M", '*', OperandShape::Multi, 3);
    if (key == "M/S") return single_op("M/S", '/', OperandShape::Multi, 3);
    if (key == "M/M") return single_op("M/M", '/', OperandShape::Multi, 3);
    if (key == "EXPR+-") return expr_task("EXPR+-", "+-", false);
    if (key == "EXPR+-*") return expr_task("EXPR+-*", "+-*", false);
    if (key == "EXPR") return expr_task("EXPR", "+-*/", true);
    throw UnsupportedTask(name);
}

// Right operand of the asymmetric tasks (M×S, M÷S) is a single digit.
inline bool right_operand_single(const TaskSpec& spec) {
    return spec.id.size() == 3 && spec.id.back() == 'S' && spec.shape == OperandShape::Multi;
}

}  // namespace skillcalc

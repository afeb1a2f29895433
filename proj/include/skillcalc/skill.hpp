#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "skillcalc/errors.hpp"
#include "skillcalc/expr.hpp"
#include "skillcalc/tokens.hpp"

namespace skillcalc {

// Frozen deterministic policy: TokenSeq -> TokenSeq. Throws SubmoduleError or
// LengthMismatch on inputs it cannot process.
class SkillModule {
public:
    virtual ~SkillModule() = default;
    virtual const std::string& name() const = 0;
    virtual TokenSeq invoke(const TokenSeq& input) const = 0;
};

using SkillPtr = std::shared_ptr<const SkillModule>;

class FunctionSkill : public SkillModule {
public:
    FunctionSkill(std::string name, std::function<TokenSeq(const TokenSeq&)> fn)
        : name_(std::move(name)), fn_(std::move(fn)) {}
    const std::string& name() const override { return name_; }
    TokenSeq invoke(const TokenSeq& input) const override { return fn_(input); }

private:
    std::string name_;
    std::function<TokenSeq(const TokenSeq&)> fn_;
};

// Ordered frozen module list; index 0 is the HALT pseudo-module.
class SkillRegistry {
public:
    static constexpr int kHalt = 0;

    int size() const { return static_cast<int>(mods_.size()) + 1; }

    int add(SkillPtr m) {
        mods_.push_back(std::move(m));
        return static_cast<int>(mods_.size());
    }

    bool is_halt(int i) const { return i == kHalt; }

    const SkillModule& at(int i) const {
        if (i <= 0 || i >= size()) throw IndexOutOfRange("registry index " + std::to_string(i));
        return *mods_[static_cast<std::size_t>(i - 1)];
    }

    std::string name_of(int i) const {
        if (i == kHalt) return "HALT";
        return at(i).name();
    }

    int index_of(const std::string& name) const {
        if (name == "HALT") return kHalt;
        for (std::size_t k = 0; k < mods_.size(); ++k)
            if (mods_[k]->name() == name) return static_cast<int>(k) + 1;
        return -1;
    }

    const SkillModule& by_name(const std::string& name) const {
        const int i = index_of(name);
        if (i <= 0) throw MissingModule(name);
        return at(i);
    }

private:
    std::vector<SkillPtr> mods_;
};

namespace detail {

// Strict "<digits><op><digits>" shape: returns operands or rejects.
inline std::pair<BigInt, BigInt> split_binary(const TokenSeq& in, Token op, bool left_single,
                                              bool right_single, const std::string& who) {
    std::size_t k = 0;
    while (k < in.size() && is_digit_token(in[k])) ++k;
    if (k == 0 || k == in.size() || in[k] != op) throw SubmoduleError(who);
    const std::size_t op_at = k;
    for (std::size_t j = op_at + 1; j < in.size(); ++j)
        if (!is_digit_token(in[j])) throw SubmoduleError(who);
    if (op_at + 1 == in.size()) throw SubmoduleError(who);
    if (left_single && op_at != 1) throw SubmoduleError(who);
    if (right_single && op_at + 2 != in.size()) throw SubmoduleError(who);
    BigInt a = 0, b = 0;
    for (std::size_t j = 0; j < op_at; ++j) a = a * 10 + static_cast<int>(in[j]);
    for (std::size_t j = op_at + 1; j < in.size(); ++j) b = b * 10 + static_cast<int>(in[j]);
    return {a, b};
}

}  // namespace detail

// Oracle-backed skill with strict input shape; used to validate machine
// semantics independently of learned modules.
inline SkillPtr exact_skill(const std::string& task_id) {
    auto binary = [task_id](Token op, bool ls, bool rs, auto combine) {
        return std::make_shared<FunctionSkill>(
            task_id, [=](const TokenSeq& in) -> TokenSeq {
                auto [a, b] = detail::split_binary(in, op, ls, rs, task_id);
                return render_tokens(combine(a, b));
            });
    };
    auto plus = [](const BigInt& a, const BigInt& b) { return a + b; };
    auto minus = [](const BigInt& a, const BigInt& b) { return a - b; };
    auto times = [](const BigInt& a, const BigInt& b) { return a * b; };
    if (task_id == "S+S") return binary(kPlus, true, true, plus);
    if (task_id == "S-S") return binary(kMinus, true, true, minus);
    if (task_id == "S*S") return binary(kTimes, true, true, times);
    if (task_id == "M+M") return binary(kPlus, false, false, plus);
    if (task_id == "M-M") return binary(kMinus, false, false, minus);
    if (task_id == "M*S") return binary(kTimes, false, true, times);
    if (task_id == "M*M") return binary(kTimes, false, false, times);
    if (task_id == "M/S" || task_id == "M/M") {
        const bool rs = task_id == "M/S";
        return std::make_shared<FunctionSkill>(task_id, [task_id, rs](const TokenSeq& in) {
            auto [a, b] = detail::split_binary(in, kDivide, false, rs, task_id);
            if (b == 0 || a % b != 0) throw SubmoduleError(task_id);
            return render_tokens(BigInt(a / b));
        });
    }
    if (task_id == "SS+") {
        // Juxtaposed digit sum: "xy" -> x+y, "x" -> x.
        return std::make_shared<FunctionSkill>("SS+", [](const TokenSeq& in) -> TokenSeq {
            if (in.empty() || in.size() > 2) throw SubmoduleError("SS+");
            int s = 0;
            for (Token t : in) {
                if (!is_digit_token(t)) throw SubmoduleError("SS+");
                s += static_cast<int>(t);
            }
            return render_tokens(BigInt(s));
        });
    }
    if (task_id == "ID") {
        return std::make_shared<FunctionSkill>("ID", [](const TokenSeq& in) { return in; });
    }
    throw UnsupportedTask(task_id);
}

}  // namespace skillcalc

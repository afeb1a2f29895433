#pragma once

#include <algorithm>
#include <cctype>
#include <string>
#include <vector>

#include "skillcalc/errors.hpp"
#include "skillcalc/ism.hpp"
#include "skillcalc/skill.hpp"
#include "skillcalc/tokens.hpp"

namespace skillcalc {
namespace detail {

inline bool all_digits(const TokenSeq& v, std::size_t s, std::size_t e) {
    for (std::size_t i = s; i < e; ++i)
        if (v[i] > 9) return false;
    return true;
}

struct PlanSim {
    TokenSeq sim;
    const SkillRegistry& reg;
    int l_max;
    std::vector<CompositeAction> acts;

    void act(int mod, int r1s, int r1e, int r2s, int r2e, int ws, int we) {
        CompositeAction a{mod, r1s, r1e, r2s, r2e, ws, we};
        sim = apply_action(sim, a, reg, l_max).first;
        acts.push_back(a);
    }
    void halt() { acts.push_back(CompositeAction{SkillRegistry::kHalt, 0, 0, 0, 0, 0, 0}); }
};

// Column addition A+B with the juxtaposed digit-sum module SS+. Memory
// invariant between columns: A '+' B_rest [c] R, where R holds the low
// result digits and the optional carry token c is always '1'.
inline std::vector<CompositeAction> plan_mplusm(const TokenSeq& input, const SkillRegistry& reg,
                                                int l_max) {
    const int ssp = reg.index_of("SS+");
    if (ssp < 0) throw MissingModule("SS+");
    auto plus = std::find(input.begin(), input.end(), kPlus);
    if (plus == input.end()) throw UnsupportedTask("M+M planner: no '+' in input");
    const int n = static_cast<int>(plus - input.begin());
    const int m = static_cast<int>(input.size()) - n - 1;
    if (n < 1 || m < 1 || !all_digits(input, 0, n) || !all_digits(input, n + 1, input.size()))
        throw UnsupportedTask("M+M planner: not digits '+' digits");

    PlanSim p{input, reg, l_max, {}};
    bool carry = false;
    for (int i = 0; i < std::max(n, m); ++i) {
        const bool ha = i < n, hb = i < m;
        const int pa = n - 1 - i;
        const int pb = n + (m - i);
        if (ha && hb) {
            const int s1 = p.sim[pa] + p.sim[pb];
            p.act(ssp, pa, pa + 1, pb, pb + 1, pb, pb + 1);
            if (!carry) {
                carry = s1 >= 10;
            } else if (s1 <= 9) {  // s c R -> (s+1) R  (or "10" R when s=9)
                p.act(ssp, pb, pb + 1, pb + 1, pb + 2, pb, pb + 2);
                carry = s1 + 1 >= 10;
            } else {  // '1' u c R -> '1' (u+1) R; u <= 8 so no overflow
                p.act(ssp, pb + 1, pb + 2, pb + 2, pb + 3, pb + 1, pb + 3);
                carry = true;
            }
        } else if (ha) {
            if (carry) {  // a_i + carry written over the carry token
                const int s = p.sim[pa] + 1;
                p.act(ssp, pa, pa + 1, n + 1, n + 2, n + 1, n + 2);
                carry = s >= 10;
            } else {  // copy the remaining A digit in front of R
                p.act(ssp, pa, pa + 1, 0, 0, n + 1, n + 1);
            }
        } else {
            if (carry) {
                const int s = p.sim[pb] + 1;
                p.act(ssp, pb, pb + 1, pb + 1, pb + 2, pb, pb + 2);
                carry = s >= 10;
            } else {
                break;  // untouched B prefix is already the result prefix
            }
        }
    }
    // Result sits at [n+1, end); copy its lead digit over the "A +" junk.
    p.act(ssp, n + 1, n + 2, 0, 0, 0, n + 2);
    p.halt();
    return p.acts;
}

// Schoolbook A*b. Memory invariant: A '*' b [c] R with carry value 0..8;
// each column's product "a_i*b" is inserted at n+2 then merged with c.
inline std::vector<CompositeAction> plan_mtimess(const TokenSeq& input, const SkillRegistry& reg,
                                                 int l_max) {
    const int ssp = reg.index_of("SS+");
    const int sxs = reg.index_of("S*S");
    if (ssp < 0) throw MissingModule("SS+");
    if (sxs < 0) throw MissingModule("S*S");
    auto star = std::find(input.begin(), input.end(), kTimes);
    if (star == input.end()) throw UnsupportedTask("M*S planner: no '*' in input");
    const int n = static_cast<int>(star - input.begin());
    if (n < 1 || static_cast<int>(input.size()) != n + 2 || !all_digits(input, 0, n) ||
        input[n + 1] > 9)
        throw UnsupportedTask("M*S planner: not digits '*' digit");

    PlanSim p{input, reg, l_max, {}};
    const int b = input[n + 1];
    if (b == 0) {  // one zero product wipes the whole memory to "0"
        p.act(sxs, n - 1, n, n, n + 2, 0, n + 2);
        p.halt();
        return p.acts;
    }
    int cval = 0;
    for (int i = 0; i < n; ++i) {
        const int pa = n - 1 - i;
        const int t = p.sim[pa] * b;
        p.act(sxs, pa, pa + 1, n, n + 2, n + 2, n + 2);  // insert a_i*b before [c] R
        if (cval == 0) {
            cval = t / 10;
        } else if (t <= 9) {  // t c R -> (t+c) R, two tokens if it carries
            const int s = t + cval;
            p.act(ssp, n + 2, n + 3, n + 3, n + 4, n + 2, n + 4);
            cval = s / 10;
        } else {  // t1 t0 c R -> t1 (t0+c) R, extra merge when that carries
            const int s = t % 10 + cval;
            p.act(ssp, n + 3, n + 4, n + 4, n + 5, n + 3, n + 5);
            if (s <= 9) {
                cval = t / 10;
            } else {  // t1 '1' u R -> (t1+1) u R; t1 <= 8 so no overflow
                p.act(ssp, n + 2, n + 3, n + 3, n + 4, n + 2, n + 4);
                cval = t / 10 + 1;
            }
        }
    }
    // Result sits at [n+2, end); copy its lead digit over the "A * b" junk.
    p.act(ssp, n + 2, n + 3, 0, 0, 0, n + 3);
    p.halt();
    return p.acts;
}

// Innermost-parens-first reduction over {+,*}. Each reduction reads the
// full "A op B" run; when it spans a whole paren interior the write span
// swallows every enclosing redundant pair. Lone "(d)" is stripped by an
// SS+ singleton copy.
inline std::vector<CompositeAction> plan_expression(const TokenSeq& input,
                                                    const SkillRegistry& reg, int l_max) {
    const int ssp = reg.index_of("SS+");
    const int mpm = reg.index_of("M+M");
    const int mtm = reg.index_of("M*M");
    if (mpm < 0) throw MissingModule("M+M");
    if (mtm < 0) throw MissingModule("M*M");

    PlanSim p{input, reg, l_max, {}};
    for (int guard = 0; guard < 128; ++guard) {
        const int len = static_cast<int>(p.sim.size());
        if (all_digits(p.sim, 0, len)) {
            p.halt();
            return p.acts;
        }
        int close = -1, open = -1;
        for (int i = 0; i < len; ++i)
            if (p.sim[i] == kRParen) {
                close = i;
                break;
            }
        if (close >= 0)
            for (int i = close - 1; i >= 0; --i)
                if (p.sim[i] == kLParen) {
                    open = i;
                    break;
                }
        const int lo = close >= 0 ? open + 1 : 0;
        const int hi = close >= 0 ? close : len;
        auto strip = [&](int& s, int& e) {
            while (s > 0 && e < static_cast<int>(p.sim.size()) && p.sim[s - 1] == kLParen &&
                   p.sim[e] == kRParen) {
                --s;
                ++e;
            }
        };
        if (all_digits(p.sim, lo, hi)) {  // redundant parens around a literal
            if (hi - lo != 1 || ssp < 0)
                throw UnsupportedTask("expression planner: parenthesized multi-digit literal");
            int s = lo, e = hi;
            strip(s, e);
            p.act(ssp, lo, lo + 1, 0, 0, s, e);
            continue;
        }
        int op = -1;  // leftmost '*' wins, else leftmost '+'
        for (int i = lo; i < hi; ++i)
            if (p.sim[i] == kTimes) {
                op = i;
                break;
            }
        if (op < 0)
            for (int i = lo; i < hi; ++i)
                if (p.sim[i] == kPlus) {
                    op = i;
                    break;
                }
        if (op < 0) throw UnsupportedTask("expression planner: operator not in {+,*}");
        int ls = op, re = op + 1;
        while (ls > lo && p.sim[ls - 1] <= 9) --ls;
        while (re < hi && p.sim[re] <= 9) ++re;
        if (ls == op || re == op + 1)
            throw UnsupportedTask("expression planner: missing operand");
        int ws = ls, we = re;
        if (ls == lo && re == hi) strip(ws, we);
        p.act(p.sim[op] == kTimes ? mtm : mpm, ls, re, 0, 0, ws, we);
    }
    throw UnsupportedTask("expression planner: did not reduce");
}

inline std::string normalize_task(std::string id) {
    std::string out;
    for (std::size_t i = 0; i < id.size(); ++i) {
        unsigned char c = static_cast<unsigned char>(id[i]);
        if (c == 0xC3 && i + 1 < id.size() && static_cast<unsigned char>(id[i + 1]) == 0x97) {
            out += '*';
            ++i;
        } else if (c == 0xC3 && i + 1 < id.size() &&
                   static_cast<unsigned char>(id[i + 1]) == 0xB7) {
            out += '/';
            ++i;
        } else {
            out += static_cast<char>(std::toupper(c));
        }
    }
    return out;
}

}  // namespace detail

class ScriptedPolicy {
public:
    explicit ScriptedPolicy(const std::string& task_id) : id_(detail::normalize_task(task_id)) {
        if (id_ == "M+M") {
            planner_ = &detail::plan_mplusm;
        } else if (id_ == "M*S") {
            planner_ = &detail::plan_mtimess;
        } else if (id_ == "EXPR" || id_ == "EXPRESSION" || id_ == "EXPRESSION-STEP") {
            id_ = "EXPR";
            planner_ = &detail::plan_expression;
        } else {
            throw UnsupportedTask("scripted policy for " + task_id);
        }
    }

    const std::string& task_id() const { return id_; }

    // Canonical module set this planner needs (HALT is implicit index 0).
    SkillRegistry registry() const {
        SkillRegistry reg;
        reg.add(exact_skill("SS+"));
        if (id_ == "M*S") reg.add(exact_skill("S*S"));
        if (id_ == "EXPR") {
            reg.add(exact_skill("M+M"));
            reg.add(exact_skill("M*M"));
        }
        return reg;
    }

    std::vector<CompositeAction> plan(const TokenSeq& input, const SkillRegistry& reg,
                                      int l_max = 64) const {
        return planner_(input, reg, l_max);
    }

private:
    using Planner = std::vector<CompositeAction> (*)(const TokenSeq&, const SkillRegistry&, int);
    std::string id_;
    Planner planner_ = nullptr;
};

inline ScriptedPolicy scripted_policy(const std::string& task_id) {
    return ScriptedPolicy(task_id);
}

// Execute a scripted plan through the machine, recording a trace-compatible
// episode (values/log-probs stay zero: no policy network is involved).
inline Episode run_scripted(const ScriptedPolicy& policy, const SkillRegistry& registry,
                            const TokenSeq& input, int l_max = 64, int t_max = 40) {
    TokenSeq memory = init_memory(input, l_max);
    auto actions = policy.plan(input, registry, l_max);
    if (static_cast<int>(actions.size()) > t_max)
        throw BudgetExhausted("scripted plan length " + std::to_string(actions.size()));
    Episode ep;
    for (const CompositeAction& a : actions) {
        StepRecord step;
        step.memory = memory;
        step.action = a;
        step.raw = {a.module, a.r1s, a.r1e, a.r2s, a.r2e, a.ws, a.we};
        auto [next, rec] = apply_action(memory, a, registry, l_max);
        step.inv = rec;
        ep.steps.push_back(std::move(step));
        if (rec.halted) {
            ep.halted = true;
            ep.output = memory;
            return ep;
        }
        memory = std::move(next);
    }
    ep.output = memory;
    return ep;
}

}  // namespace skillcalc

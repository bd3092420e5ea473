#pragma once

// Per-session budget caps (token cap L and tool-call limit N).  Declared
// separately so the episode runner can enforce them without pulling in the
// rest of the defense module.

#include <optional>
#include <string>

namespace edos {

struct BudgetCaps {
    std::optional<long> token_cap;  // per-session output-token cap
    std::optional<int> call_limit;  // tool-call limit

    void validate() const {
        if (token_cap && *token_cap <= 0) throw std::invalid_argument("token_cap must be positive");
        if (call_limit && *call_limit <= 0) throw std::invalid_argument("call_limit must be positive");
    }
};

struct CapDecision {
    bool halt = false;
    std::string reason;  // "token_cap" or "call_limit" when halted
};

// Pre-commit check: the runner calls this before committing each agent
// emission (for tool calls, with the tentative turn already counted), so
// overshoot is bounded by one emission.
template <class TrajectoryLike>
CapDecision enforce_caps(const BudgetCaps& caps, const TrajectoryLike& prefix) {
    if (caps.token_cap && prefix.tok_out > *caps.token_cap) return {true, "token_cap"};
    if (caps.call_limit && prefix.turns > *caps.call_limit) return {true, "call_limit"};
    return {false, {}};
}

}  // namespace edos

#pragma once

// Agent-tool loop: agent-policy contract, a parameterized simulated agent,
// token accounting, and episode execution with success judgment.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "edos/caps.hpp"
#include "edos/editor.hpp"
#include "edos/policy.hpp"
#include "edos/toolserver.hpp"
#include "edos/wire.hpp"

namespace edos {

// ---------------------------------------------------------------------------
// Token accounting

// Crude deterministic tokenizer: maximal alphanumeric runs count one each,
// punctuation counts per character, whitespace counts zero.  Not comparable
// with any production tokenizer; all reported comparisons are ratios.
inline long token_count(std::string_view text) {
    long n = 0;
    bool in_run = false;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            if (!in_run) ++n;
            in_run = true;
        } else {
            in_run = false;
            if (!std::isspace(c)) ++n;
        }
    }
    return n;
}

// ---------------------------------------------------------------------------
// Queries, actions, trajectories

struct Query {
    std::string id;
    std::string text;
    std::string goal_key;  // substring certifying success of the final answer
    bool routable = true;
};

enum class ActionKind { CallTool, FinalAnswer };

struct AgentAction {
    ActionKind kind = ActionKind::FinalAnswer;
    std::optional<ToolCall> call;
    std::optional<std::string> answer;

    static AgentAction make_call(ToolCall c) { return {ActionKind::CallTool, std::move(c), {}}; }
    static AgentAction make_answer(std::string a) {
        return {ActionKind::FinalAnswer, {}, std::move(a)};
    }
};

struct TrajectoryStep {
    AgentAction action;
    std::optional<ToolResponse> response;  // present for CallTool steps
};

struct Trajectory {
    std::string episode_id;
    std::vector<TrajectoryStep> steps;
    std::string final_answer;
    long tok_out = 0;
    int turns = 0;
    bool succ = false;
    std::optional<std::string> halt_reason;  // token_cap / call_limit / step_limit
    std::optional<std::string> error;

    int progress_count() const {
        int n = 0;
        for (const auto& s : steps)
            if (s.response && s.response->kind == ResponseKind::Progress) ++n;
        return n;
    }
    int repair_count() const {
        int n = 0;
        for (const auto& s : steps)
            if (s.response && s.response->kind == ResponseKind::Repair) ++n;
        return n;
    }
    bool reached_terminal() const {
        for (const auto& s : steps)
            if (s.response && s.response->kind == ResponseKind::Terminal) return true;
        return false;
    }
    // Highest segment index confirmed by the server (ordered by construction).
    int segments_reached() const { return progress_count() + (reached_terminal() ? 1 : 0); }
    long max_call_emission() const {
        long best = 0;
        for (const auto& s : steps)
            if (s.action.kind == ActionKind::CallTool) {
                long t = 0;
                for (const auto& [k, v] : s.action.call->args) t += token_count(v);
                best = std::max(best, t);
            }
        return best;
    }
};

// ---------------------------------------------------------------------------
// Template features seen by the simulated agent

struct TemplateFeatures {
    double next_call_salience = 0;
    double completeness_emphasis = 0;
    double repair_clarity = 0;

    double weighted(const std::map<std::string, double>& weights) const {
        double sum = 0;
        auto add = [&](const char* name, double value) {
            auto it = weights.find(name);
            if (it != weights.end()) sum += it->second * value;
        };
        add("next_call_salience", next_call_salience);
        add("completeness_emphasis", completeness_emphasis);
        add("repair_clarity", repair_clarity);
        return sum;
    }
};

namespace detail {

inline int count_occurrences(const std::string& haystack, std::string_view needle) {
    if (needle.empty()) return 0;
    int n = 0;
    std::size_t pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string::npos) {
        ++n;
        pos += needle.size();
    }
    return n;
}

}  // namespace detail

// Keyword/structure scoring of the four text zones.  Each catalog clause
// carries a fixed feature weight; a few generic keywords give human-authored
// seeds a small baseline signal.
inline TemplateFeatures extract_features(const Template& tpl) {
    TemplateFeatures f;
    auto zone_text = [&](EditZone z) -> const std::string& {
        switch (z) {
            case EditZone::seg_arg_desc: return tpl.seg_arg_desc;
            case EditZone::seq_arg_desc: return tpl.seq_arg_desc;
            case EditZone::progress_text: return tpl.progress_text;
            case EditZone::repair_text: return tpl.repair_text;
        }
        return tpl.progress_text;
    };
    // Per-clause weights, keyed by edit id.
    auto clause_weight = [](const EditAction& a) -> double {
        switch (a.id) {
            case 1: return 3.0;
            case 7: return 3.0;
            case 13: return 1.0;
            case 14: return 0.75;
            default: return 0.5;
        }
    };
    for (const auto& a : edit_catalog()) {
        if (zone_text(a.zone).find(a.clause) == std::string::npos) continue;
        const double w = clause_weight(a);
        switch (a.family) {
            case EditFamily::MT: f.next_call_salience += w; break;
            case EditFamily::LEN: f.completeness_emphasis += w; break;
            case EditFamily::REP: f.repair_clarity += w; break;
        }
    }
    f.next_call_salience += 0.1 * detail::count_occurrences(tpl.progress_text, "call");
    f.completeness_emphasis += 0.2 * detail::count_occurrences(tpl.seq_arg_desc, "complete");
    f.repair_clarity += 0.2 * (detail::count_occurrences(tpl.repair_text, "retry") +
                               detail::count_occurrences(tpl.repair_text, "resend"));
    return f;
}

// ---------------------------------------------------------------------------
// Agent-policy contract

class AgentPolicy {
public:
    virtual ~AgentPolicy() = default;
    virtual AgentAction next(const Query& query, const std::vector<ToolDescriptor>& tools,
                             const Trajectory& history) = 0;
};

// ---------------------------------------------------------------------------
// Simulated agent

struct SimAgentParams {
    double compliance_base = 0.95;
    std::map<std::string, double> feature_weights;  // feature name -> weight
    double omission_rate = 0.5;
    double abbreviation_rate = 0.3;
    double refusal_rate = 0.2;
    std::uint64_t rng_seed = 0;

    void validate() const {
        auto prob = [](double p, const char* name) {
            if (p < 0 || p > 1) throw std::invalid_argument(std::string(name) + " outside [0,1]");
        };
        prob(compliance_base, "compliance_base");
        prob(omission_rate, "omission_rate");
        prob(abbreviation_rate, "abbreviation_rate");
        prob(refusal_rate, "refusal_rate");
    }
};

inline std::string full_sequence_text(long l_star) {
    std::string out;
    out.reserve(static_cast<std::size_t>(l_star) * 5);
    for (long i = 1; i <= l_star; ++i) {
        if (i > 1) out += ',';
        out += std::to_string(i);
    }
    return out;
}

// Deterministic stand-in for a black-box tool-calling model.  Per-turn
// compliance probability is a logistic function of the wrapped template's
// features; non-compliant turns draw one deviation (omission, abbreviation,
// or refusal) by normalized weights.
class SimAgent : public AgentPolicy {
public:
    SimAgent(SimAgentParams params, std::optional<Template> wrapped_template,
             std::uint64_t episode_seed)
        : params_(std::move(params)), rng_(params_.rng_seed ^ (episode_seed * 0x9E3779B97F4A7C15ULL)) {
        params_.validate();
        if (wrapped_template) {
            features_ = extract_features(*wrapped_template);
            l_star_ = wrapped_template->l_star;
        }
    }

    double comply_probability() const {
        if (params_.compliance_base >= 1.0) return 1.0;
        if (params_.compliance_base <= 0.0) return 0.0;
        const double logit = std::log(params_.compliance_base / (1.0 - params_.compliance_base));
        const double z = logit + features_.weighted(params_.feature_weights);
        return 1.0 / (1.0 + std::exp(-z));
    }

    AgentAction next(const Query& query, const std::vector<ToolDescriptor>& tools,
                     const Trajectory& history) override {
        if (!query.routable || tools.empty())
            return AgentAction::make_answer("No tool needed. " + query.text);

        // After a Terminal response the agent always answers, surfacing the payload.
        if (!history.steps.empty() && history.steps.back().response &&
            history.steps.back().response->kind == ResponseKind::Terminal) {
            const std::string& payload = *history.steps.back().response->payload;
            return AgentAction::make_answer("Tool result: " + payload + ". Query '" + query.id +
                                            "' resolved.");
        }

        const ToolDescriptor& tool = tools.front();  // single-tool scope
        const bool wrapped = tool.has_arg(kSegmentArgName) && tool.has_arg(kSequenceArgName);
        if (!wrapped) {
            ToolCall call{tool.name, benign_args(tool), history.turns + 1};
            return AgentAction::make_call(std::move(call));
        }

        const int next_segment = history.segments_reached() + 1;
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        if (unit(rng_) < comply_probability()) {
            ToolCall call{tool.name,
                          {{kSegmentArgName, std::to_string(next_segment)},
                           {kSequenceArgName, full_sequence_text(l_star_)}},
                          history.turns + 1};
            return AgentAction::make_call(std::move(call));
        }

        // One deviation per non-compliant turn, mutually exclusive.
        const double total = params_.omission_rate + params_.abbreviation_rate + params_.refusal_rate;
        double pick = total > 0 ? unit(rng_) * total : 0.0;
        if (total <= 0 || pick < params_.omission_rate) {
            ToolCall call{tool.name,
                          {{kSegmentArgName, std::to_string(next_segment)},
                           {kSequenceArgName, full_sequence_text(std::max(1L, l_star_ / 2))}},
                          history.turns + 1};
            if (l_star_ <= 1) call.args[kSequenceArgName] = "";
            return AgentAction::make_call(std::move(call));
        }
        if (pick < params_.omission_rate + params_.abbreviation_rate) {
            const std::string abbrev = l_star_ >= 3
                                           ? "1,2,...," + std::to_string(l_star_)
                                           : "1-" + std::to_string(l_star_);
            ToolCall call{tool.name,
                          {{kSegmentArgName, std::to_string(next_segment)},
                           {kSequenceArgName, abbrev}},
                          history.turns + 1};
            return AgentAction::make_call(std::move(call));
        }
        return AgentAction::make_answer("I cannot continue this tool procedure.");
    }

private:
    static std::map<std::string, std::string> benign_args(const ToolDescriptor& tool) {
        std::map<std::string, std::string> args;
        for (const auto& a : tool.arg_schema)
            args[a.name] = (a.kind == "int" || a.kind == "float") ? "1" : "sample";
        return args;
    }

    SimAgentParams params_;
    TemplateFeatures features_;
    long l_star_ = 1;
    std::mt19937_64 rng_;
};

// ---------------------------------------------------------------------------
// Scripted agent (tests, replay fixtures)

class ScriptedAgent : public AgentPolicy {
public:
    explicit ScriptedAgent(std::vector<AgentAction> script) : script_(std::move(script)) {}

    AgentAction next(const Query&, const std::vector<ToolDescriptor>&, const Trajectory&) override {
        if (pos_ >= script_.size())
            return AgentAction::make_answer("script exhausted");
        return script_[pos_++];
    }

private:
    std::vector<AgentAction> script_;
    std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Remote agent adapter (production contract; no hosted client shipped)

inline nlohmann::json to_json(const AgentAction& a) {
    if (a.kind == ActionKind::CallTool)
        return {{"kind", "call"},
                {"tool", a.call->tool},
                {"args", a.call->args},
                {"turn_index", a.call->turn_index}};
    return {{"kind", "answer"}, {"answer", *a.answer}};
}

inline AgentAction agent_action_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "call") {
        ToolCall call;
        call.tool = j.at("tool").get<std::string>();
        call.args = j.at("args").get<std::map<std::string, std::string>>();
        call.turn_index = j.value("turn_index", 1);
        return AgentAction::make_call(std::move(call));
    }
    if (kind == "answer") return AgentAction::make_answer(j.at("answer").get<std::string>());
    throw WireError("unknown action kind: " + kind);
}

// Transport: one request line in, one response line out.
using AgentTransport = std::function<std::string(const std::string&)>;

// Ships the (query, rendered tools, transcript) state to an external policy
// endpoint.  Timeouts and malformed replies map to refusal actions.
class RemoteAgentAdapter : public AgentPolicy {
public:
    RemoteAgentAdapter(AgentTransport transport, std::string prompt_config = {})
        : transport_(std::move(transport)), prompt_config_(std::move(prompt_config)) {
        if (!transport_) throw std::invalid_argument("adapter error: null transport");
    }

    AgentAction next(const Query& query, const std::vector<ToolDescriptor>& tools,
                     const Trajectory& history) override {
        nlohmann::json req{{"query", {{"id", query.id}, {"text", query.text}}},
                           {"prompt_config", prompt_config_},
                           {"tools", nlohmann::json::array()},
                           {"transcript", nlohmann::json::array()}};
        for (const auto& t : tools) req["tools"].push_back(to_json(t));
        for (const auto& s : history.steps) {
            nlohmann::json step{{"action", to_json(s.action)}};
            if (s.response)
                step["response"] = {{"kind", to_string(s.response->kind)},
                                    {"text", s.response->text}};
            req["transcript"].push_back(std::move(step));
        }
        try {
            const std::string reply = transport_(req.dump() + "\n");
            return agent_action_from_json(nlohmann::json::parse(reply));
        } catch (const std::exception&) {
            return AgentAction::make_answer("I cannot continue this tool procedure.");
        }
    }

private:
    AgentTransport transport_;
    std::string prompt_config_;
};

// ---------------------------------------------------------------------------
// Episode execution

struct EpisodeOptions {
    std::string episode_id = "ep";
    long per_turn_cap = 16384;  // serving-style per-generation completion cap
    int max_steps = 256;        // hard stop for never-terminating policies
};

namespace detail {

// Truncates text at the serving cap, at a byte boundary past the last
// counted token.
inline std::string truncate_to_tokens(const std::string& text, long cap) {
    if (token_count(text) <= cap) return text;
    long n = 0;
    bool in_run = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const unsigned char c = static_cast<unsigned char>(text[i]);
        if (std::isalnum(c)) {
            if (!in_run) ++n;
            in_run = true;
        } else {
            in_run = false;
            if (!std::isspace(c)) ++n;
        }
        if (n > cap) return text.substr(0, i);
    }
    return text;
}

inline long call_emission_tokens(const ToolCall& call) {
    long t = 0;
    for (const auto& [k, v] : call.args) t += token_count(v);
    return t;
}

}  // namespace detail

inline Trajectory run_episode(AgentPolicy& agent, ToolServer& server, const Query& query,
                              const BudgetCaps& caps, const EpisodeOptions& opts = {}) {
    caps.validate();
    Trajectory traj;
    traj.episode_id = opts.episode_id;
    const auto tools = server.list_tools();

    for (int step_n = 0; step_n < opts.max_steps; ++step_n) {
        // Token cap is checked pre-commit, so overshoot is at most one emission.
        if (auto d = enforce_caps(caps, traj); d.halt) {
            traj.halt_reason = d.reason;
            return traj;
        }
        AgentAction action;
        try {
            action = agent.next(query, tools, traj);
        } catch (const std::exception& e) {
            traj.error = e.what();
            return traj;
        }

        if (action.kind == ActionKind::CallTool) {
            action.call->turn_index = traj.turns + 1;
            if (auto it = action.call->args.find(kSequenceArgName); it != action.call->args.end())
                it->second = detail::truncate_to_tokens(it->second, opts.per_turn_cap);
            struct { long tok_out; int turns; } tentative{
                traj.tok_out + detail::call_emission_tokens(*action.call), traj.turns + 1};
            // Only the call limit blocks a commit; token-cap overshoot of one
            // emission is tolerated and caught at the top of the next step.
            BudgetCaps call_only;
            call_only.call_limit = caps.call_limit;
            if (auto d = enforce_caps(call_only, tentative); d.halt) {
                traj.halt_reason = d.reason;
                return traj;
            }
            ToolResponse response;
            try {
                response = server.handle_call(opts.episode_id, *action.call);
            } catch (const std::exception& e) {
                traj.error = e.what();
                return traj;
            }
            traj.tok_out = tentative.tok_out;
            traj.turns = tentative.turns;
            traj.steps.push_back({std::move(action), std::move(response)});
        } else {
            const std::string answer = detail::truncate_to_tokens(*action.answer, opts.per_turn_cap);
            traj.tok_out += token_count(answer);
            traj.final_answer = answer;
            traj.steps.push_back({AgentAction::make_answer(answer), std::nullopt});
            break;
        }
    }

    if (traj.final_answer.empty() && !traj.halt_reason && !traj.error)
        traj.halt_reason = "step_limit";

    if (!traj.final_answer.empty()) {
        bool payload_ok = true;
        if (traj.turns > 0) {
            payload_ok = false;
            for (const auto& s : traj.steps)
                if (s.response && s.response->kind == ResponseKind::Terminal &&
                    traj.final_answer.find(*s.response->payload) != std::string::npos)
                    payload_ok = true;
        }
        traj.succ = !query.goal_key.empty() &&
                    traj.final_answer.find(query.goal_key) != std::string::npos && payload_ok;
    }
    return traj;
}

// ---------------------------------------------------------------------------
// Trajectory (de)serialization for the episode log and replay fixtures

inline nlohmann::json to_json(const Trajectory& t) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : t.steps) {
        nlohmann::json step{{"action", to_json(s.action)}};
        if (s.response) {
            step["response"] = {{"kind", to_string(s.response->kind)}, {"text", s.response->text}};
            if (s.response->payload) step["response"]["payload"] = *s.response->payload;
        }
        steps.push_back(std::move(step));
    }
    nlohmann::json j{{"episode_id", t.episode_id}, {"steps", steps},
                     {"final_answer", t.final_answer}, {"tok_out", t.tok_out},
                     {"turns", t.turns}, {"succ", t.succ}};
    if (t.halt_reason) j["halt_reason"] = *t.halt_reason;
    if (t.error) j["error"] = *t.error;
    return j;
}

inline Trajectory trajectory_from_json(const nlohmann::json& j) {
    Trajectory t;
    t.episode_id = j.at("episode_id").get<std::string>();
    for (const auto& s : j.at("steps")) {
        TrajectoryStep step;
        step.action = agent_action_from_json(s.at("action"));
        if (s.contains("response")) {
            ToolResponse resp;
            const std::string kind = s.at("response").at("kind").get<std::string>();
            resp.kind = kind == "progress" ? ResponseKind::Progress
                        : kind == "repair" ? ResponseKind::Repair
                                           : ResponseKind::Terminal;
            resp.text = s.at("response").at("text").get<std::string>();
            if (s.at("response").contains("payload"))
                resp.payload = s.at("response").at("payload").get<std::string>();
            step.response = std::move(resp);
        }
        t.steps.push_back(std::move(step));
    }
    t.final_answer = j.at("final_answer").get<std::string>();
    t.tok_out = j.at("tok_out").get<long>();
    t.turns = j.at("turns").get<int>();
    t.succ = j.at("succ").get<bool>();
    if (j.contains("halt_reason")) t.halt_reason = j.at("halt_reason").get<std::string>();
    if (j.contains("error")) t.error = j.at("error").get<std::string>();
    return t;
}

}  // namespace edos

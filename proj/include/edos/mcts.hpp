#pragma once

// Phase-gated UCT tree search over template edits: two-stage evaluation,
// multiplicative reward shaping, Stage-1-only visit accounting, and an
// acceptance predicate over the latest Stage-2 batch.

#include <cmath>
#include <cstdint>
#include <future>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "edos/editor.hpp"
#include "edos/policy.hpp"

namespace edos {

struct SearchError : std::runtime_error {
    explicit SearchError(const std::string& what) : std::runtime_error(what) {}
};

// One rollout's pass/fail summary as seen by the optimizer.
struct RolloutOutcome {
    bool mt_pass = false;         // >= m_star ordered segments reached
    bool len_pass = false;        // l_star reached with omissions repaired
    bool omission_observed = false;  // any Repair notice in the trajectory
    bool error = false;           // episode error; scored as reward 0
};

// Black-box evaluation surface the search optimizes against.  Must be safe
// to call concurrently.
class EvalHarness {
public:
    virtual ~EvalHarness() = default;
    virtual RolloutOutcome rollout(const Template& tpl, std::uint64_t seed) = 0;
};

struct SearchConfig {
    double c_uct = 1.2;
    double alpha = 0.4;
    double beta = 0.6;
    int m_star = 0;  // 0 = use the template's t_max
    int stage1_rollouts = 4;
    int stage2_rollouts = 12;
    double stage1_gate = 0.75;       // mt_pass rate needed to flip phase / run Stage-2
    double accept_threshold = 0.8;   // full-success rate over the latest Stage-2 batch
    long budget = 2000;              // total rollouts
    std::uint64_t rng_seed = 1;

    void validate() const {
        if (c_uct <= 0) throw SearchError("config error: c_uct must be positive");
        if (!(0 < alpha && alpha <= beta && beta <= 1))
            throw SearchError("config error: need 0 < alpha <= beta <= 1");
        if (stage1_rollouts < 1 || stage2_rollouts < 1)
            throw SearchError("config error: stage sizes must be positive");
        if (stage1_gate < 0 || stage1_gate > 1 || accept_threshold < 0 || accept_threshold > 1)
            throw SearchError("config error: gates must lie in [0,1]");
        if (budget <= 0) throw SearchError("config error: budget must be positive");
    }
};

inline double rollout_reward(bool mt_pass, bool len_pass, const SearchConfig& cfg) {
    cfg.validate();
    const double mt = mt_pass ? 1.0 : 0.0;
    const double len = len_pass ? 1.0 : 0.0;
    return cfg.alpha * mt + cfg.beta * mt * len;
}

struct SearchNode {
    Template tpl;
    double q_bar = 0;         // running mean over all rollouts at this node
    long n_uct = 0;           // Stage-1 visits credited along this path
    long rollouts_seen = 0;
    SearchPhase phase = SearchPhase::pre_MT;
    bool omission_flag = false;
    bool dead = false;        // fully expanded, no live children
    std::set<int> tried;
    std::vector<std::unique_ptr<SearchNode>> children;
    SearchNode* parent = nullptr;
    int action_id = 0;           // edge that produced this node (0 = root)
    std::vector<int> edit_path;  // action ids from the seed
};

inline SearchNode& uct_select(SearchNode& node, double c) {
    const SearchNode* best = nullptr;
    double best_score = -1;
    for (const auto& child : node.children) {
        if (child->dead) continue;
        const double explore =
            c * std::sqrt(std::log(1.0 + static_cast<double>(node.n_uct)) /
                          (1.0 + static_cast<double>(child->n_uct)));
        const double score = child->q_bar + explore;
        // Ties break toward the lowest action id; children are stored in
        // ascending id order, so strict improvement suffices.
        if (!best || score > best_score) {
            best = child.get();
            best_score = score;
        }
    }
    if (!best) throw SearchError("selection error: node has no live children");
    return const_cast<SearchNode&>(*best);
}

struct EvalStats {
    double mt_rate_stage1 = 0;
    double latest_batch_success = 0;  // full-success rate over the last batch run
    bool stage2_ran = false;
    long rollouts_used = 0;
};

struct SearchStats {
    long total_rollouts = 0;
    int nodes_created = 1;
    bool accepted = false;
    double best_q = 0;
    std::vector<int> best_path;
    nlohmann::json rollout_log = nlohmann::json::array();
    nlohmann::json node_log = nlohmann::json::array();
};

struct SearchResult {
    Template best;
    bool accepted = false;
    SearchStats stats;
};

namespace detail {

inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

struct BatchResult {
    std::vector<RolloutOutcome> outcomes;
};

inline BatchResult run_batch(EvalHarness& harness, const Template& tpl, std::uint64_t block,
                             int count) {
    BatchResult out;
    out.outcomes.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) out.outcomes.push_back(harness.rollout(tpl, block + i));
    return out;
}

}  // namespace detail

// Runs the two-stage evaluation of one node: Stage-1 screen (updates Q-bar
// and visit counts along the path), phase flip plus Stage-2 once segment
// sequencing stabilizes.
inline EvalStats evaluate_node(SearchNode& node, const SearchConfig& cfg, EvalHarness& harness,
                               std::uint64_t seed_block, SearchStats& stats) {
    EvalStats ev;
    auto absorb = [&](const std::vector<RolloutOutcome>& outcomes, const char* stage) {
        int successes = 0;
        for (const auto& o : outcomes) {
            const bool mt = o.mt_pass && !o.error;
            const bool len = o.len_pass && !o.error;
            const double r = rollout_reward(mt, len, cfg);
            node.rollouts_seen += 1;
            node.q_bar += (r - node.q_bar) / static_cast<double>(node.rollouts_seen);
            if (o.omission_observed) node.omission_flag = true;
            if (mt && len) ++successes;
            stats.rollout_log.push_back({{"node", node.edit_path},
                                         {"stage", stage},
                                         {"mt_pass", mt},
                                         {"len_pass", len},
                                         {"reward", r}});
        }
        stats.total_rollouts += static_cast<long>(outcomes.size());
        ev.rollouts_used += static_cast<long>(outcomes.size());
        return successes;
    };

    auto stage1 = detail::run_batch(harness, node.tpl, seed_block, cfg.stage1_rollouts);
    int mt_hits = 0;
    for (const auto& o : stage1.outcomes)
        if (o.mt_pass && !o.error) ++mt_hits;
    const int s1_success = absorb(stage1.outcomes, "stage1");
    ev.mt_rate_stage1 = static_cast<double>(mt_hits) / cfg.stage1_rollouts;
    ev.latest_batch_success = static_cast<double>(s1_success) / cfg.stage1_rollouts;

    // Exploration counts use Stage-1 samples only.
    for (SearchNode* n = &node; n; n = n->parent) n->n_uct += cfg.stage1_rollouts;

    if (ev.mt_rate_stage1 >= cfg.stage1_gate) {
        node.phase = SearchPhase::post_MT;  // segment sequencing stabilized
        auto stage2 =
            detail::run_batch(harness, node.tpl, seed_block + cfg.stage1_rollouts,
                              cfg.stage2_rollouts);
        const int s2_success = absorb(stage2.outcomes, "stage2");
        ev.latest_batch_success = static_cast<double>(s2_success) / cfg.stage2_rollouts;
        ev.stage2_ran = true;
    }
    return ev;
}

// Full search loop: select by UCT, expand one child per untried legal
// action (no-op edits pruned), evaluate new children with pre-assigned
// disjoint seed blocks, stop on acceptance or budget exhaustion.
inline SearchResult search(const Template& seed, const SearchConfig& cfg, EvalHarness& harness) {
    cfg.validate();
    seed.validate();

    SearchResult result{seed, false, {}};
    SearchNode root;
    root.tpl = seed;
    std::uint64_t eval_counter = 0;
    auto next_block = [&] { return detail::mix64(cfg.rng_seed ^ (eval_counter++ << 20)); };

    auto log_node = [&](const SearchNode& n, const EvalStats& ev) {
        result.stats.node_log.push_back({{"path", n.edit_path},
                                         {"phase", to_string(n.phase)},
                                         {"q_bar", n.q_bar},
                                         {"n_uct", n.n_uct},
                                         {"omission", n.omission_flag},
                                         {"batch_success", ev.latest_batch_success}});
    };
    auto accepted = [&](const SearchNode& n, const EvalStats& ev) {
        return ev.stage2_ran && ev.latest_batch_success >= cfg.accept_threshold;
    };

    EvalStats root_ev = evaluate_node(root, cfg, harness, next_block(), result.stats);
    log_node(root, root_ev);
    if (accepted(root, root_ev)) {
        result.accepted = true;
        result.stats.accepted = true;
        result.best = root.tpl;
        result.stats.best_q = root.q_bar;
        return result;
    }

    while (result.stats.total_rollouts < cfg.budget) {
        // Selection: descend while fully expanded.
        SearchNode* v = &root;
        while (true) {
            const auto legal = legal_actions(v->phase, v->omission_flag);
            bool fully = true;
            for (const auto& a : legal)
                if (!v->tried.count(a.id)) fully = false;
            if (!fully) break;
            bool has_live = false;
            for (const auto& c : v->children)
                if (!c->dead) has_live = true;
            if (!has_live) {
                v->dead = true;
                break;
            }
            v = &uct_select(*v, cfg.c_uct);
        }
        if (root.dead) break;
        if (v->dead) continue;

        // Expansion: one child per untried legal action, all at once.
        std::vector<SearchNode*> fresh;
        for (const auto& a : legal_actions(v->phase, v->omission_flag)) {
            if (v->tried.count(a.id)) continue;
            v->tried.insert(a.id);
            EditResult edited = apply_edit(v->tpl, a);
            if (!edited.changed) continue;  // saturated edit, prune
            auto child = std::make_unique<SearchNode>();
            child->tpl = std::move(edited.tpl);
            child->phase = v->phase;
            child->parent = v;
            child->action_id = a.id;
            child->edit_path = v->edit_path;
            child->edit_path.push_back(a.id);
            fresh.push_back(child.get());
            v->children.push_back(std::move(child));
            result.stats.nodes_created += 1;
        }
        if (fresh.empty()) continue;

        // Pre-assigned disjoint seed blocks, in ascending action id, so
        // results do not depend on evaluation interleaving.
        std::vector<std::uint64_t> blocks;
        blocks.reserve(fresh.size());
        for (std::size_t i = 0; i < fresh.size(); ++i) blocks.push_back(next_block());

        for (std::size_t i = 0; i < fresh.size(); ++i) {
            EvalStats ev = evaluate_node(*fresh[i], cfg, harness, blocks[i], result.stats);
            log_node(*fresh[i], ev);
            if (accepted(*fresh[i], ev)) {
                result.accepted = true;
                result.stats.accepted = true;
                result.best = fresh[i]->tpl;
                result.stats.best_path = fresh[i]->edit_path;
                result.stats.best_q = fresh[i]->q_bar;
                return result;
            }
            if (result.stats.total_rollouts >= cfg.budget) break;
        }
    }

    // Budget exhausted: return the best-Q-bar template in the tree.
    const SearchNode* best = &root;
    std::vector<const SearchNode*> stack{&root};
    while (!stack.empty()) {
        const SearchNode* n = stack.back();
        stack.pop_back();
        if (n->q_bar > best->q_bar) best = n;
        for (const auto& c : n->children) stack.push_back(c.get());
    }
    result.best = best->tpl;
    result.stats.best_path = best->edit_path;
    result.stats.best_q = best->q_bar;
    return result;
}

}  // namespace edos

// Acceptance suite: one self-contained check per release criterion, each
// printing a single [PASS]/[FAIL] line.  Exit status is nonzero if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "edos/corpus.hpp"
#include "edos/defense.hpp"
#include "edos/harness.hpp"
#include "edos/mcts.hpp"
#include "edos/policy.hpp"
#include "edos/seedbank.hpp"
#include "planted_toys.hpp"

using namespace edos;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Criterion {
    int id;
    std::string title;
    std::function<bool(std::string&)> run;
};

// --------------------------------------------------------------------------
// 1. State machine vs. exhaustive brute-force oracle

bool check_state_machine(std::string& detail) {
    const auto start = Clock::now();
    long transitions = 0, mismatches = 0;
    enum class Sym { valid_next, valid_skip, invalid_seq };
    for (int t_max = 1; t_max <= 4; ++t_max) {
        for (long l_star = 1; l_star <= 3; ++l_star) {
            Template tpl;
            tpl.seg_arg_desc = "segment index";
            tpl.seq_arg_desc = "list of {L} integers";
            tpl.progress_text = "ok {t}, next {t_next}";
            tpl.repair_text = "retry {t_next}";
            tpl.t_max = t_max;
            tpl.l_star = l_star;
            std::string good;
            for (long i = 1; i <= l_star; ++i) {
                if (i > 1) good += ',';
                good += std::to_string(i);
            }
            for (int len = 0; len <= 8; ++len) {
                const long total = static_cast<long>(std::pow(3, len));
                for (long code = 0; code < total; ++code) {
                    long c = code;
                    SessionState st;
                    int oracle_t = 0;
                    bool oracle_done = false;
                    for (int k = 0; k < len && !st.terminated; ++k) {
                        const Sym sym = static_cast<Sym>(c % 3);
                        c /= 3;
                        std::string seg = std::to_string(
                            st.t_current + (sym == Sym::valid_skip ? 2 : 1));
                        std::string seq = sym == Sym::invalid_seq ? "1,1" : good;
                        const StepResult r = step(tpl, st, seg, seq, "P");
                        if (sym == Sym::valid_next && !oracle_done) {
                            ++oracle_t;
                            if (oracle_t == t_max) oracle_done = true;
                        }
                        const bool repair_kept_t =
                            r.response.kind != ResponseKind::Repair ||
                            r.state.t_current == st.t_current;
                        st = r.state;
                        ++transitions;
                        if (st.t_current != oracle_t || st.terminated != oracle_done ||
                            !repair_kept_t ||
                            (r.response.kind == ResponseKind::Terminal && !oracle_done))
                            ++mismatches;
                    }
                }
            }
        }
    }
    const double elapsed = seconds_since(start);
    std::ostringstream out;
    out << transitions << " transitions, " << mismatches << " mismatches, "
        << std::fixed << std::setprecision(1) << elapsed << "s";
    detail = out.str();
    return mismatches == 0 && elapsed < 10.0;
}

// --------------------------------------------------------------------------
// 2. Sequence validator: generated valid lists plus mutation oracle

bool check_validator(std::string& detail) {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> count(2, 8);
    std::uniform_int_distribution<long> gap(1, 99);
    long accepted = 0, misclassified = 0, corruptions = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = count(rng);
        std::vector<long> vals;
        long v = 0;
        for (int i = 0; i < n; ++i) vals.push_back(v += gap(rng));
        auto join = [](const std::vector<long>& xs) {
            std::string s;
            for (std::size_t i = 0; i < xs.size(); ++i) {
                if (i) s += ',';
                s += std::to_string(xs[i]);
            }
            return s;
        };
        if (validate_sequence(join(vals), n).valid) ++accepted;

        auto expect = [&](const std::string& text, SeqReason reason) {
            ++corruptions;
            const SeqVerdict verdict = validate_sequence(text, n);
            if (verdict.valid || verdict.reason != reason) ++misclassified;
        };
        for (int i = 0; i < n; ++i) {  // deletion
            auto m = vals;
            m.erase(m.begin() + i);
            expect(join(m), SeqReason::wrong_count);
        }
        for (int i = 0; i + 1 < n; ++i) {  // adjacent swap
            if (vals[i] == vals[i + 1]) continue;
            auto m = vals;
            std::swap(m[i], m[i + 1]);
            expect(join(m), SeqReason::not_increasing);
        }
        for (int i = 0; i < n; ++i) {  // in-place duplication
            auto m = vals;
            m.insert(m.begin() + i, vals[i]);
            expect(join(m), SeqReason::duplicate);
        }
        expect(join(vals) + "x", SeqReason::illegal_char);
        expect(join(vals) + "-500", SeqReason::range_syntax);
        expect(join(vals) + ",...", SeqReason::ellipsis);
        expect("", SeqReason::empty);
    }
    std::ostringstream out;
    out << accepted << "/1000 valid accepted, " << corruptions << " corruptions, "
        << misclassified << " misclassified";
    detail = out.str();
    return accepted == 1000 && misclassified == 0;
}

// --------------------------------------------------------------------------
// 3. UCT selection vs. direct formula evaluation

bool check_uct(std::string& detail) {
    std::mt19937_64 rng(303);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> n_children(1, 12);
    std::uniform_int_distribution<long> visits(0, 500);
    int mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        SearchNode node;
        const int k = n_children(rng);
        for (int i = 0; i < k; ++i) {
            auto child = std::make_unique<SearchNode>();
            child->action_id = i + 1;
            if (i > 0 && unit(rng) < 0.25) {  // manufactured exact ties
                child->q_bar = node.children.back()->q_bar;
                child->n_uct = node.children.back()->n_uct;
            } else {
                child->q_bar = unit(rng);
                child->n_uct = visits(rng);
            }
            node.n_uct += child->n_uct;
            node.children.push_back(std::move(child));
        }
        node.n_uct += visits(rng);
        const double c = 0.1 + 2.9 * unit(rng);
        const SearchNode* oracle = nullptr;
        double best = 0;
        for (const auto& child : node.children) {
            const double score =
                child->q_bar + c * std::sqrt(std::log(1.0 + static_cast<double>(node.n_uct)) /
                                             (1.0 + static_cast<double>(child->n_uct)));
            if (!oracle || score > best) {
                oracle = child.get();
                best = score;
            }
        }
        if (&uct_select(node, c) != oracle) ++mismatches;
    }
    detail = std::to_string(mismatches) + " mismatches over 1000 configurations";
    return mismatches == 0;
}

// --------------------------------------------------------------------------
// 4. Reward shaping: multiplicative gating in every logged reward

// Harness emitting all four (mt, len) combinations, including the
// impossible-looking (false, true), which must still score 0.
struct ComboHarness : EvalHarness {
    RolloutOutcome rollout(const Template&, std::uint64_t seed) override {
        const std::uint64_t h = detail::mix64(seed);
        RolloutOutcome o;
        o.mt_pass = h % 2 == 0;
        o.len_pass = (h / 2) % 2 == 0;
        o.omission_observed = h % 8 == 0;
        return o;
    }
};

bool check_rewards(std::string& detail) {
    SearchConfig cfg;
    if (rollout_reward(false, true, cfg) != 0.0) {
        detail = "direct (mt=false, len=true) reward nonzero";
        return false;
    }
    ComboHarness harness;
    cfg.budget = 400;
    cfg.rng_seed = 12;
    const SearchResult res = search(handcrafted_template(2, 3), cfg, harness);
    long checked = 0, bad = 0, gated = 0;
    for (const auto& entry : res.stats.rollout_log) {
        const double r = entry.at("reward").get<double>();
        const bool mt = entry.at("mt_pass").get<bool>();
        const bool len = entry.at("len_pass").get<bool>();
        const bool in_set = r == 0.0 || std::abs(r - cfg.alpha) < 1e-12 ||
                            std::abs(r - (cfg.alpha + cfg.beta)) < 1e-12;
        if (!in_set) ++bad;
        if (!mt && r != 0.0) ++bad;
        if (!mt && len) ++gated;  // the combination the gating must zero out
        ++checked;
    }
    std::ostringstream out;
    out << checked << " logged rewards, " << gated << " gated (mt=0,len=1) cases, " << bad
        << " violations";
    detail = out.str();
    return checked > 0 && gated > 0 && bad == 0;
}

// --------------------------------------------------------------------------
// 5. Planted-optimum convergence, depth 1 and depth 2

bool check_planted(std::string& detail) {
    std::ostringstream out;
    bool ok = true;
    for (int depth : {1, 2}) {
        const toys::Toy proto = depth == 1 ? toys::depth1_toy(0) : toys::depth2_toy(0);
        SimHarness harness = toys::toy_harness(proto);
        const Template oracle = toys::brute_force_optimum(proto, depth, 128, harness);
        const Template planted = toys::apply_path(proto.seed, proto.planted_path);
        if (!(oracle == planted)) {
            out << "depth-" << depth << ": brute force disagrees with the planted path; ";
            ok = false;
            continue;
        }
        int matched = 0;
        double worst_run = 0;
        for (int run = 0; run < 20; ++run) {
            toys::Toy toy = proto;
            toy.search_cfg.rng_seed = 1000 + static_cast<std::uint64_t>(run);
            const auto start = Clock::now();
            const SearchResult res = search(toy.seed, toy.search_cfg, harness);
            worst_run = std::max(worst_run, seconds_since(start));
            if (res.accepted && res.best == oracle) ++matched;
        }
        out << "depth-" << depth << ": " << matched << "/20 runs matched, worst "
            << std::fixed << std::setprecision(2) << worst_run << "s; ";
        ok = ok && matched >= 19 && worst_run < 60.0;
    }
    detail = out.str();
    return ok;
}

// --------------------------------------------------------------------------
// 6. Amplification at desk scale

bool check_amplification(std::string& detail, const fs::path& workdir) {
    const Template tpl = handcrafted_template(6, 2000);
    const std::string tpl_path = (workdir / "accept_t6.json").string();
    save_template(tpl, tpl_path);
    ExperimentConfig cfg;
    cfg.condition = Condition::handcrafted;
    cfg.template_path = tpl_path;
    cfg.agent.compliance_base = 1.0;
    cfg.agent.omission_rate = cfg.agent.abbreviation_rate = cfg.agent.refusal_rate = 0;
    cfg.root_seed = 6;
    const ExperimentResult res = run_experiment(cfg);
    long floor_violations = 0;
    for (const auto& t : res.episodes)
        if (t.tok_out < 6 * (2 * 2000 - 1)) ++floor_violations;
    std::ostringstream out;
    out << "amplification x" << std::fixed << std::setprecision(1)
        << res.summary.amplification << ", " << floor_violations
        << " episodes below the closed-form floor";
    detail = out.str();
    return res.summary.amplification >= 50.0 && floor_violations == 0;
}

// --------------------------------------------------------------------------
// 7. Cap soundness across the sweep

bool check_caps(std::string& detail, const fs::path& workdir) {
    const Template tpl = handcrafted_template(4, 500);
    const std::string tpl_path = (workdir / "accept_caps.json").string();
    save_template(tpl, tpl_path);
    ExperimentConfig base;
    base.condition = Condition::handcrafted;
    base.template_path = tpl_path;
    base.agent.compliance_base = 1.0;
    base.agent.omission_rate = base.agent.abbreviation_rate = base.agent.refusal_rate = 0;
    base.root_seed = 7;

    const std::vector<long> caps{1000, 2000, 4000, 8000};
    const std::vector<int> limits{1, 2, 4, 6};
    std::vector<std::vector<Trajectory>> logs;
    const auto cells = run_defense_sweep(base, caps, limits, &logs);

    long violations = 0;
    for (std::size_t i = 0; i < cells.size(); ++i)
        for (const auto& t : logs[i]) {
            if (t.tok_out > *cells[i].token_cap + base.per_turn_cap) ++violations;
            if (t.turns > *cells[i].call_limit) ++violations;
        }

    auto asr_at = [&](long cap, int limit) {
        for (const auto& c : cells)
            if (*c.token_cap == cap && *c.call_limit == limit) return c.asr;
        return -1.0;
    };
    long monotone_breaks = 0;
    for (std::size_t ci = 0; ci + 1 < caps.size(); ++ci)
        for (int limit : limits)
            if (asr_at(caps[ci], limit) > asr_at(caps[ci + 1], limit) + 1e-12) ++monotone_breaks;
    for (long cap : caps)
        for (std::size_t li = 0; li + 1 < limits.size(); ++li)
            if (asr_at(cap, limits[li]) > asr_at(cap, limits[li + 1]) + 1e-12) ++monotone_breaks;

    double min_asr = 1, max_asr = 0;
    for (const auto& c : cells) {
        min_asr = std::min(min_asr, c.asr);
        max_asr = std::max(max_asr, c.asr);
    }
    std::ostringstream out;
    out << cells.size() << " cells, " << violations << " cap violations, " << monotone_breaks
        << " monotonicity breaks, ASR range [" << std::fixed << std::setprecision(2) << min_asr
        << ", " << max_asr << "]";
    detail = out.str();
    // The sweep must actually bite: tight cells kill the attack, loose keep it.
    return violations == 0 && monotone_breaks == 0 && min_asr == 0.0 && max_asr == 1.0;
}

// --------------------------------------------------------------------------
// 8. PPL filter mechanics

bool check_ppl(std::string& detail) {
    std::vector<std::string> docs;
    for (const auto& entry : builtin_corpus().entries) docs.push_back(entry.descriptor.doc_text);
    const TrigramScorer scorer(docs);
    const double threshold = calibrate_threshold(scorer, docs);

    double corpus_max = 0;
    for (const auto& doc : docs) corpus_max = std::max(corpus_max, scorer.score(doc));
    if (threshold != corpus_max) {
        detail = "threshold differs from the corpus max";
        return false;
    }
    long benign_flags = 0;
    for (const auto& doc : docs)
        if (ppl_flag(scorer, threshold, doc, std::nullopt)) ++benign_flags;

    std::mt19937_64 rng(808);
    std::uniform_int_distribution<int> len(3, 60);
    std::uniform_int_distribution<int> ch(' ', '~');
    long flag_mismatches = 0, flagged = 0;
    for (int i = 0; i < 200; ++i) {
        std::string query, response;
        for (int k = len(rng); k; --k) query += static_cast<char>(ch(rng));
        std::optional<std::string> resp;
        if (i % 2 == 0) {
            for (int k = len(rng); k; --k) response += static_cast<char>(ch(rng));
            resp = response;
        }
        const bool flag = ppl_flag(scorer, threshold, query, resp);
        const double worst =
            std::max(scorer.score(query), resp ? scorer.score(*resp) : 0.0);
        if (flag != (worst > threshold)) ++flag_mismatches;
        if (flag) ++flagged;
    }
    std::ostringstream out;
    out << "200 episodes, " << flagged << " flagged, " << flag_mismatches << " mismatches, "
        << benign_flags << " benign docs flagged";
    detail = out.str();
    return flag_mismatches == 0 && benign_flags == 0;
}

// --------------------------------------------------------------------------
// 9. Determinism of logs and reports

bool check_determinism(std::string& detail, const fs::path& workdir) {
    const Template tpl = handcrafted_template(4, 80);
    const std::string tpl_path = (workdir / "accept_det.json").string();
    save_template(tpl, tpl_path);
    ExperimentConfig cfg;
    cfg.condition = Condition::handcrafted;
    cfg.template_path = tpl_path;
    cfg.agent.rng_seed = 55;  // stochastic agent; seeds carry the determinism
    cfg.root_seed = 99;

    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    std::vector<std::string> traj_bytes, report_bytes, rows_bytes;
    for (int run = 0; run < 2; ++run) {
        const fs::path dir = workdir / ("det_run_" + std::to_string(run));
        fs::create_directories(dir);
        const ExperimentResult res = run_experiment(cfg);
        write_trajectory_log(res.episodes, dir / "trajectories.jsonl");
        report(res.summary, dir);
        traj_bytes.push_back(slurp(dir / "trajectories.jsonl"));
        report_bytes.push_back(slurp(dir / "report.txt"));
        rows_bytes.push_back(slurp(dir / "rows.json"));
    }
    const bool same = traj_bytes[0] == traj_bytes[1] && report_bytes[0] == report_bytes[1] &&
                      rows_bytes[0] == rows_bytes[1] && !traj_bytes[0].empty();
    detail = same ? "trajectory log, report and rows byte-identical across runs"
                  : "repeated run diverged";
    return same;
}

}  // namespace

int main() {
    const fs::path workdir = fs::temp_directory_path() / "edos_acceptance";
    fs::remove_all(workdir);
    fs::create_directories(workdir);

    const std::vector<Criterion> criteria = {
        {1, "state machine matches the exhaustive oracle", check_state_machine},
        {2, "sequence validator: valid lists and mutation oracle", check_validator},
        {3, "UCT selection equals the direct formula", check_uct},
        {4, "reward shaping is multiplicatively gated", check_rewards},
        {5, "planted optima found at depth 1 and depth 2", check_planted},
        {6, "token amplification at desk scale",
         [&](std::string& d) { return check_amplification(d, workdir); }},
        {7, "budget caps are sound and monotone across the sweep",
         [&](std::string& d) { return check_caps(d, workdir); }},
        {8, "perplexity filter mechanics", check_ppl},
        {9, "identical seeds give byte-identical logs and reports",
         [&](std::string& d) { return check_determinism(d, workdir); }},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        std::string detail;
        bool ok = false;
        try {
            ok = c.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        if (!ok) ++failures;
        std::printf("[%s] criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", c.id, c.title.c_str(),
                    detail.empty() ? "-" : detail.c_str());
    }
    std::printf("[NOTE] criterion 10: energy, KV-cache, throughput and judge-model detection "
                "rates are out of desk scope by design; no claim is made or tested here.\n");

    fs::remove_all(workdir);
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
                criteria.size());
    return failures == 0 ? 0 : 1;
}

#pragma once

// Experiment harness: wires corpus, server, agent and defenses together;
// computes metrics and emits reports.  Every reported number is
// recomputable from the trajectory log alone.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "edos/agentsim.hpp"
#include "edos/caps.hpp"
#include "edos/corpus.hpp"
#include "edos/defense.hpp"
#include "edos/mcts.hpp"
#include "edos/toolserver.hpp"

namespace edos {

struct HarnessError : std::runtime_error {
    explicit HarnessError(const std::string& what) : std::runtime_error(what) {}
};

enum class Condition { benign, handcrafted, optimized };

inline const char* to_string(Condition c) {
    switch (c) {
        case Condition::benign: return "benign";
        case Condition::handcrafted: return "handcrafted";
        case Condition::optimized: return "optimized";
    }
    return "?";
}

inline Condition condition_from_string(const std::string& s) {
    if (s == "benign") return Condition::benign;
    if (s == "handcrafted") return Condition::handcrafted;
    if (s == "optimized") return Condition::optimized;
    throw HarnessError("usage error: condition must be benign|handcrafted|optimized, got " + s);
}

struct ExperimentConfig {
    std::string corpus_path;  // empty = builtin corpus
    Condition condition = Condition::benign;
    std::string template_path;  // required for non-benign conditions
    SimAgentParams agent;
    BudgetCaps caps;
    std::uint64_t root_seed = 1;
    int repetitions = 1;
    std::string output_dir;
    int concurrency = 25;
    int m_star = 0;           // 0 = template t_max
    long len_threshold = 0;   // 0 = 2*l_star - 1
    long per_turn_cap = 16384;

    void validate() const {
        if (repetitions < 1) throw HarnessError("usage error: repetitions must be >= 1");
        if (condition != Condition::benign && template_path.empty())
            throw HarnessError("usage error: template_path required for non-benign condition");
        if (concurrency < 1) throw HarnessError("usage error: concurrency must be >= 1");
        caps.validate();
        agent.validate();
    }
};

// ---------------------------------------------------------------------------
// Rollout harness backing the MCTS optimizer and seed screening

class SimHarness : public EvalHarness {
public:
    SimHarness(Corpus corpus, SimAgentParams agent, int m_star = 0, BudgetCaps caps = {},
               long per_turn_cap = 16384)
        : corpus_(std::move(corpus)), agent_(std::move(agent)), m_star_(m_star), caps_(caps),
          per_turn_cap_(per_turn_cap) {
        if (corpus_.entries.empty()) throw HarnessError("empty corpus");
    }

    RolloutOutcome rollout(const Template& tpl, std::uint64_t seed) override {
        const auto& entry = corpus_.entries[seed % corpus_.entries.size()];
        const auto& query = entry.queries[(seed / corpus_.entries.size()) % entry.queries.size()];
        ToolServer server({{entry.descriptor}, {{entry.descriptor.name, tpl}}});
        SimAgentParams params = agent_;
        params.rng_seed ^= seed;
        SimAgent sim(params, tpl, seed);
        EpisodeOptions opts;
        opts.episode_id = "rollout-" + std::to_string(seed);
        opts.per_turn_cap = per_turn_cap_;
        Trajectory traj;
        RolloutOutcome out;
        try {
            traj = run_episode(sim, server, query, caps_, opts);
        } catch (const std::exception&) {
            out.error = true;
            return out;
        }
        const int target = m_star_ > 0 ? m_star_ : tpl.t_max;
        out.mt_pass = traj.segments_reached() >= target;
        out.len_pass = traj.reached_terminal();  // implies every omission was repaired
        out.omission_observed = traj.repair_count() > 0;
        out.error = traj.error.has_value();
        return out;
    }

private:
    Corpus corpus_;
    SimAgentParams agent_;
    int m_star_;
    BudgetCaps caps_;
    long per_turn_cap_;
};

// ---------------------------------------------------------------------------
// Metrics

struct QueryRow {
    std::string query_id;
    std::string condition;
    long tok_out = 0;
    int turns = 0;
    long max_call_emission = 0;
    bool succ = false;
};

struct RunSummary {
    double mean_tok_out = 0;
    double mean_turns = 0;
    double asr = 0;
    double tsr_reference = 0;
    double amplification = 1.0;  // attack / benign token ratio
    std::vector<QueryRow> rows;
};

inline double compute_asr(const std::vector<Trajectory>& episodes, int m_star, long len_threshold) {
    if (episodes.empty()) throw HarnessError("metric error: empty episode set");
    long hits = 0;
    for (const auto& t : episodes)
        if (t.turns >= m_star && t.max_call_emission() >= len_threshold && t.succ) ++hits;
    return static_cast<double>(hits) / static_cast<double>(episodes.size());
}

// Benign-condition task success: succ alone.
inline double compute_tsr(const std::vector<Trajectory>& episodes) {
    if (episodes.empty()) throw HarnessError("metric error: empty episode set");
    long hits = 0;
    for (const auto& t : episodes)
        if (t.succ) ++hits;
    return static_cast<double>(hits) / static_cast<double>(episodes.size());
}

// ---------------------------------------------------------------------------
// Experiment execution

struct ExperimentResult {
    std::vector<Trajectory> episodes;         // the evaluated condition
    std::vector<Trajectory> benign_baseline;  // same seeds, benign servers
    RunSummary summary;
    Template tpl;  // meaningful for non-benign conditions
};

namespace detail {

struct EpisodeJob {
    const CorpusEntry* entry;
    const Query* query;
    int repetition;
    std::uint64_t seed;
};

inline Trajectory run_one(const EpisodeJob& job, const ExperimentConfig& cfg,
                          const Template* tpl) {
    ServerConfig sc{{job.entry->descriptor}, {}};
    if (tpl) sc.wrapped[job.entry->descriptor.name] = *tpl;
    ToolServer server(std::move(sc));
    SimAgentParams params = cfg.agent;
    params.rng_seed ^= job.seed;
    std::optional<Template> agent_view;
    if (tpl) agent_view = *tpl;
    SimAgent agent(params, agent_view, job.seed);
    EpisodeOptions opts;
    opts.episode_id = job.query->id + "#r" + std::to_string(job.repetition);
    opts.per_turn_cap = cfg.per_turn_cap;
    return run_episode(agent, server, *job.query, cfg.caps, opts);
}

}  // namespace detail

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const Corpus corpus = cfg.corpus_path.empty() ? builtin_corpus() : load_corpus(cfg.corpus_path);
    Template tpl;
    const bool wrapped = cfg.condition != Condition::benign;
    if (wrapped) tpl = load_template(cfg.template_path);

    std::vector<detail::EpisodeJob> jobs;
    std::uint64_t index = 0;
    for (const auto& entry : corpus.entries)
        for (const auto& query : entry.queries)
            for (int rep = 0; rep < cfg.repetitions; ++rep)
                jobs.push_back({&entry, &query, rep,
                                detail::mix64(cfg.root_seed ^ (index++ * 0x51ED2701u))});

    auto run_all = [&](const Template* use_tpl) {
        std::vector<Trajectory> out(jobs.size());
        std::size_t next = 0;
        while (next < jobs.size()) {
            const std::size_t batch =
                std::min<std::size_t>(static_cast<std::size_t>(cfg.concurrency),
                                      jobs.size() - next);
            std::vector<std::future<Trajectory>> futures;
            for (std::size_t i = 0; i < batch; ++i)
                futures.push_back(std::async(std::launch::async, detail::run_one,
                                             jobs[next + i], std::cref(cfg), use_tpl));
            for (std::size_t i = 0; i < batch; ++i) out[next + i] = futures[i].get();
            next += batch;
        }
        return out;
    };

    ExperimentResult result;
    result.tpl = tpl;
    result.benign_baseline = run_all(nullptr);
    result.episodes = wrapped ? run_all(&tpl) : result.benign_baseline;

    const int m_star = cfg.m_star > 0 ? cfg.m_star : (wrapped ? tpl.t_max : 1);
    const long len_threshold =
        cfg.len_threshold > 0 ? cfg.len_threshold : (wrapped ? 2 * tpl.l_star - 1 : 0);

    RunSummary& s = result.summary;
    double tok_sum = 0, turn_sum = 0, benign_tok_sum = 0;
    for (const auto& t : result.episodes) {
        tok_sum += static_cast<double>(t.tok_out);
        turn_sum += t.turns;
        s.rows.push_back({t.episode_id, to_string(cfg.condition), t.tok_out, t.turns,
                          t.max_call_emission(), t.succ});
    }
    for (const auto& t : result.benign_baseline) benign_tok_sum += static_cast<double>(t.tok_out);
    s.mean_tok_out = tok_sum / static_cast<double>(result.episodes.size());
    s.mean_turns = turn_sum / static_cast<double>(result.episodes.size());
    s.tsr_reference = compute_tsr(result.benign_baseline);
    s.asr = wrapped ? compute_asr(result.episodes, m_star, len_threshold)
                    : compute_tsr(result.episodes);
    const double benign_mean = benign_tok_sum / static_cast<double>(result.benign_baseline.size());
    s.amplification = benign_mean > 0 ? s.mean_tok_out / benign_mean : 1.0;
    return result;
}

// ---------------------------------------------------------------------------
// Logs and reports

inline void write_trajectory_log(const std::vector<Trajectory>& episodes,
                                 const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw HarnessError("cannot write trajectory log: " + path.string());
    for (const auto& t : episodes) out << to_json(t).dump() << "\n";
}

inline std::vector<Trajectory> load_trajectory_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw HarnessError("cannot read trajectory log: " + path.string());
    std::vector<Trajectory> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(trajectory_from_json(nlohmann::json::parse(line)));
    }
    return out;
}

inline nlohmann::json to_json(const RunSummary& s) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : s.rows)
        rows.push_back({{"query_id", r.query_id}, {"condition", r.condition},
                        {"tok_out", r.tok_out}, {"turns", r.turns},
                        {"max_call_emission", r.max_call_emission}, {"succ", r.succ}});
    return {{"mean_tok_out", s.mean_tok_out}, {"mean_turns", s.mean_turns}, {"asr", s.asr},
            {"tsr_reference", s.tsr_reference}, {"amplification", s.amplification},
            {"rows", rows}};
}

inline RunSummary summary_from_json(const nlohmann::json& j) {
    RunSummary s;
    s.mean_tok_out = j.at("mean_tok_out").get<double>();
    s.mean_turns = j.at("mean_turns").get<double>();
    s.asr = j.at("asr").get<double>();
    s.tsr_reference = j.at("tsr_reference").get<double>();
    s.amplification = j.at("amplification").get<double>();
    for (const auto& r : j.at("rows"))
        s.rows.push_back({r.at("query_id").get<std::string>(), r.at("condition").get<std::string>(),
                          r.at("tok_out").get<long>(), r.at("turns").get<int>(),
                          r.at("max_call_emission").get<long>(), r.at("succ").get<bool>()});
    return s;
}

inline std::string render_table(const RunSummary& s) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(2);
    out << "metric            value\n"
        << "mean_tok_out      " << s.mean_tok_out << "\n"
        << "mean_turns        " << s.mean_turns << "\n"
        << "asr               " << s.asr << "\n"
        << "tsr_reference     " << s.tsr_reference << "\n"
        << "amplification     x" << s.amplification << "\n";
    return out.str();
}

// Emits report.txt (table) and rows.json (machine-readable, round-trips to
// the same summary).
inline void report(const RunSummary& s, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "report.txt");
        if (!out) throw HarnessError("cannot write report");
        out << render_table(s);
    }
    {
        std::ofstream out(dir / "rows.json");
        if (!out) throw HarnessError("cannot write rows");
        out << to_json(s).dump(2) << "\n";
    }
}

// ---------------------------------------------------------------------------
// Defense sweep

struct DefenseCell {
    std::optional<long> token_cap;
    std::optional<int> call_limit;
    double asr = 0;
    double mean_tok_out = 0;
    long cap_violations = 0;  // trajectories exceeding cap + one emission
};

inline std::vector<DefenseCell> run_defense_sweep(ExperimentConfig base,
                                                  const std::vector<long>& token_caps,
                                                  const std::vector<int>& call_limits,
                                                  std::vector<std::vector<Trajectory>>* cell_logs =
                                                      nullptr) {
    std::vector<DefenseCell> cells;
    for (long cap : token_caps) {
        for (int limit : call_limits) {
            ExperimentConfig cfg = base;
            cfg.caps.token_cap = cap;
            cfg.caps.call_limit = limit;
            ExperimentResult res = run_experiment(cfg);
            Template tpl = res.tpl;
            const int m_star = cfg.m_star > 0 ? cfg.m_star : tpl.t_max;
            const long len_threshold =
                cfg.len_threshold > 0 ? cfg.len_threshold : 2 * tpl.l_star - 1;
            DefenseCell cell;
            cell.token_cap = cap;
            cell.call_limit = limit;
            cell.asr = compute_asr(res.episodes, m_star, len_threshold);
            double tok_sum = 0;
            for (const auto& t : res.episodes) {
                tok_sum += static_cast<double>(t.tok_out);
                if (t.tok_out > cap + cfg.per_turn_cap || t.turns > limit) ++cell.cap_violations;
            }
            cell.mean_tok_out = tok_sum / static_cast<double>(res.episodes.size());
            cells.push_back(cell);
            if (cell_logs) cell_logs->push_back(res.episodes);
        }
    }
    return cells;
}

inline nlohmann::json to_json(const std::vector<DefenseCell>& cells) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& c : cells) {
        nlohmann::json row{{"asr", c.asr}, {"mean_tok_out", c.mean_tok_out},
                           {"cap_violations", c.cap_violations}};
        if (c.token_cap) row["token_cap"] = *c.token_cap;
        if (c.call_limit) row["call_limit"] = *c.call_limit;
        out.push_back(std::move(row));
    }
    return out;
}

}  // namespace edos

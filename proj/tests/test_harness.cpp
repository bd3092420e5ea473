#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "edos/corpus.hpp"
#include "edos/harness.hpp"

using namespace edos;

namespace {

namespace fs = std::filesystem;

SimAgentParams compliant() {
    SimAgentParams p;
    p.compliance_base = 1.0;
    p.omission_rate = p.abbreviation_rate = p.refusal_rate = 0;
    return p;
}

std::string save_tpl(const Template& tpl, const std::string& name) {
    const std::string path = (fs::temp_directory_path() / name).string();
    save_template(tpl, path);
    return path;
}

ExperimentConfig wrapped_config(const Template& tpl, const std::string& name) {
    ExperimentConfig cfg;
    cfg.condition = Condition::handcrafted;
    cfg.template_path = save_tpl(tpl, name);
    cfg.agent = compliant();
    cfg.root_seed = 5;
    return cfg;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("compute_asr counts the conjunction of all three conditions") {
    Trajectory hit;
    hit.turns = 3;
    hit.succ = true;
    hit.steps.push_back(
        {AgentAction::make_call({"t", {{"sequence", "1,2,3,4,5"}}, 1}),
         ToolResponse{ResponseKind::Progress, "ok", std::nullopt}});

    Trajectory short_turns = hit;
    short_turns.turns = 2;
    Trajectory short_list = hit;
    short_list.steps[0].action.call->args["sequence"] = "1,2";
    Trajectory failed = hit;
    failed.succ = false;

    const std::vector<Trajectory> eps{hit, short_turns, short_list, failed};
    CHECK(compute_asr(eps, 3, 9) == doctest::Approx(0.25));
    CHECK(compute_asr(eps, 2, 3) == doctest::Approx(0.75));  // only `failed` misses
    CHECK(compute_asr({hit}, 3, 9) == doctest::Approx(1.0));
    CHECK_THROWS_AS(compute_asr({}, 1, 1), HarnessError);
    CHECK_THROWS_AS(compute_tsr({}), HarnessError);
}

TEST_CASE("benign condition: success everywhere, amplification exactly 1") {
    ExperimentConfig cfg;
    cfg.agent = compliant();
    const ExperimentResult res = run_experiment(cfg);
    CHECK(res.episodes.size() == builtin_corpus().entries.size() * 3);
    CHECK(res.summary.asr == doctest::Approx(1.0));
    CHECK(res.summary.tsr_reference == doctest::Approx(1.0));
    CHECK(res.summary.amplification == doctest::Approx(1.0));
    CHECK(res.summary.mean_turns == doctest::Approx(1.0));
}

TEST_CASE("wrapped compliant run: full ASR and the closed-form token floor") {
    const Template tpl = handcrafted_template(6, 2000);
    ExperimentConfig cfg = wrapped_config(tpl, "edos_harness_t6.json");
    const ExperimentResult res = run_experiment(cfg);
    CHECK(res.summary.asr == doctest::Approx(1.0));
    CHECK(res.summary.mean_turns == doctest::Approx(6.0));
    for (const auto& t : res.episodes) CHECK(t.tok_out >= 6 * (2 * 2000 - 1));
    CHECK(res.summary.amplification >= 50.0);

    // Recount ASR from the written log alone.
    const fs::path log = fs::temp_directory_path() / "edos_harness_log.jsonl";
    write_trajectory_log(res.episodes, log);
    const auto reloaded = load_trajectory_log(log);
    REQUIRE(reloaded.size() == res.episodes.size());
    long hits = 0;
    for (const auto& t : reloaded)
        if (t.turns >= 6 && t.max_call_emission() >= 2 * 2000 - 1 && t.succ) ++hits;
    CHECK(static_cast<double>(hits) / reloaded.size() == doctest::Approx(res.summary.asr));
    fs::remove(log);
}

TEST_CASE("identical configs produce byte-identical logs and reports") {
    const Template tpl = handcrafted_template(4, 60);
    ExperimentConfig cfg = wrapped_config(tpl, "edos_harness_det.json");
    cfg.agent = SimAgentParams{};  // stochastic agent; determinism must come from seeds
    cfg.agent.rng_seed = 9;

    const fs::path dir_a = fs::temp_directory_path() / "edos_det_a";
    const fs::path dir_b = fs::temp_directory_path() / "edos_det_b";
    for (const fs::path& dir : {dir_a, dir_b}) {
        fs::remove_all(dir);
        fs::create_directories(dir);
        const ExperimentResult res = run_experiment(cfg);
        write_trajectory_log(res.episodes, dir / "trajectories.jsonl");
        report(res.summary, dir);
    }
    CHECK(slurp(dir_a / "trajectories.jsonl") == slurp(dir_b / "trajectories.jsonl"));
    CHECK(slurp(dir_a / "report.txt") == slurp(dir_b / "report.txt"));
    CHECK(slurp(dir_a / "rows.json") == slurp(dir_b / "rows.json"));
    CHECK(!slurp(dir_a / "trajectories.jsonl").empty());
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
}

TEST_CASE("summary JSON round-trips and the table formats ratios") {
    RunSummary s;
    s.mean_tok_out = 81830.0;
    s.mean_turns = 6.0;
    s.asr = 0.97;
    s.tsr_reference = 1.0;
    s.amplification = 81830.0 / 260.0;
    s.rows.push_back({"q1", "handcrafted", 81830, 6, 3999, true});
    const nlohmann::json j = to_json(s);
    const RunSummary back = summary_from_json(j);
    CHECK(to_json(back) == j);
    REQUIRE(back.rows.size() == 1);
    CHECK(back.rows[0].max_call_emission == 3999);

    const std::string table = render_table(s);
    CHECK(table.find("x314.73") != std::string::npos);
    CHECK(table.find("asr") != std::string::npos);
}

TEST_CASE("config validation catches unusable setups") {
    ExperimentConfig cfg;
    cfg.condition = Condition::optimized;  // no template_path
    CHECK_THROWS_AS(cfg.validate(), HarnessError);
    cfg = ExperimentConfig{};
    cfg.repetitions = 0;
    CHECK_THROWS_AS(cfg.validate(), HarnessError);
    CHECK_THROWS_AS(condition_from_string("bogus"), HarnessError);
    CHECK(condition_from_string("benign") == Condition::benign);
}

TEST_CASE("defense sweep: zero cap violations, caps bite monotonically") {
    const Template tpl = handcrafted_template(4, 50);
    ExperimentConfig base = wrapped_config(tpl, "edos_harness_sweep.json");
    const std::vector<long> caps{100, 1000, 10000};
    const std::vector<int> limits{1, 4};
    const auto cells = run_defense_sweep(base, caps, limits);
    REQUIRE(cells.size() == caps.size() * limits.size());
    for (const auto& c : cells) CHECK(c.cap_violations == 0);

    auto cell = [&](long cap, int limit) -> const DefenseCell& {
        for (const auto& c : cells)
            if (*c.token_cap == cap && *c.call_limit == limit) return c;
        throw std::logic_error("missing cell");
    };
    // Tightest cell cannot beat the loosest cell.
    CHECK(cell(100, 1).asr <= cell(10000, 4).asr);
    // For a fixed call limit, ASR is non-increasing as the token cap tightens.
    for (int limit : limits) {
        CHECK(cell(100, limit).asr <= cell(1000, limit).asr);
        CHECK(cell(1000, limit).asr <= cell(10000, limit).asr);
    }
    // A one-call limit cannot complete a four-segment procedure.
    CHECK(cell(10000, 1).asr == doctest::Approx(0.0));
    // Generous caps leave the compliant attack intact.
    CHECK(cell(10000, 4).asr == doctest::Approx(1.0));
}

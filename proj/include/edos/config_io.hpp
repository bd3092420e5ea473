#pragma once

// JSON loaders for the experiment and search configuration files used by
// the CLI.  Unknown fields are ignored; invalid values surface with the
// offending field name.

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "edos/harness.hpp"
#include "edos/mcts.hpp"

namespace edos {

inline SimAgentParams agent_params_from_json(const nlohmann::json& j) {
    SimAgentParams p;
    p.compliance_base = j.value("compliance_base", p.compliance_base);
    p.omission_rate = j.value("omission_rate", p.omission_rate);
    p.abbreviation_rate = j.value("abbreviation_rate", p.abbreviation_rate);
    p.refusal_rate = j.value("refusal_rate", p.refusal_rate);
    p.rng_seed = j.value("rng_seed", p.rng_seed);
    if (j.contains("feature_weights"))
        p.feature_weights = j.at("feature_weights").get<std::map<std::string, double>>();
    p.validate();
    return p;
}

inline nlohmann::json to_json(const SimAgentParams& p) {
    return {{"compliance_base", p.compliance_base}, {"omission_rate", p.omission_rate},
            {"abbreviation_rate", p.abbreviation_rate}, {"refusal_rate", p.refusal_rate},
            {"rng_seed", p.rng_seed}, {"feature_weights", p.feature_weights}};
}

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    cfg.corpus_path = j.value("corpus_path", std::string());
    cfg.condition = condition_from_string(j.value("condition", std::string("benign")));
    cfg.template_path = j.value("template_path", std::string());
    if (j.contains("agent")) cfg.agent = agent_params_from_json(j.at("agent"));
    if (j.contains("caps")) {
        const auto& c = j.at("caps");
        if (c.contains("token_cap") && !c.at("token_cap").is_null())
            cfg.caps.token_cap = c.at("token_cap").get<long>();
        if (c.contains("call_limit") && !c.at("call_limit").is_null())
            cfg.caps.call_limit = c.at("call_limit").get<int>();
    }
    cfg.root_seed = j.value("root_seed", cfg.root_seed);
    cfg.repetitions = j.value("repetitions", cfg.repetitions);
    cfg.output_dir = j.value("output_dir", std::string("out"));
    cfg.concurrency = j.value("concurrency", cfg.concurrency);
    cfg.m_star = j.value("m_star", cfg.m_star);
    cfg.len_threshold = j.value("len_threshold", cfg.len_threshold);
    cfg.per_turn_cap = j.value("per_turn_cap", cfg.per_turn_cap);
    cfg.validate();
    return cfg;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw HarnessError("cannot read config file: " + path.string());
    nlohmann::json j;
    in >> j;
    return experiment_config_from_json(j);
}

inline SearchConfig search_config_from_json(const nlohmann::json& j) {
    SearchConfig cfg;
    cfg.c_uct = j.value("c_uct", cfg.c_uct);
    cfg.alpha = j.value("alpha", cfg.alpha);
    cfg.beta = j.value("beta", cfg.beta);
    cfg.m_star = j.value("m_star", cfg.m_star);
    cfg.stage1_rollouts = j.value("stage1_rollouts", cfg.stage1_rollouts);
    cfg.stage2_rollouts = j.value("stage2_rollouts", cfg.stage2_rollouts);
    cfg.stage1_gate = j.value("stage1_gate", cfg.stage1_gate);
    cfg.accept_threshold = j.value("accept_threshold", cfg.accept_threshold);
    cfg.budget = j.value("budget", cfg.budget);
    cfg.rng_seed = j.value("rng_seed", cfg.rng_seed);
    cfg.validate();
    return cfg;
}

inline SearchConfig load_search_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw HarnessError("cannot read search config: " + path.string());
    nlohmann::json j;
    in >> j;
    return search_config_from_json(j);
}

}  // namespace edos

// Command-line entry point: wrap descriptors, run MCTS optimization, run
// experiments, sweep defenses, inspect the seed bank, and serve the wire
// protocol over a socket.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "edos/config_io.hpp"
#include "edos/corpus.hpp"
#include "edos/defense.hpp"
#include "edos/harness.hpp"
#include "edos/mcts.hpp"
#include "edos/seedbank.hpp"

namespace {

using namespace edos;

int cmd_wrap(const std::string& descriptor_path, const std::string& template_path,
             const std::string& out_path) {
    std::ifstream in(descriptor_path);
    if (!in) throw HarnessError("cannot read descriptor file: " + descriptor_path);
    nlohmann::json j;
    in >> j;
    const ToolDescriptor benign = descriptor_from_json(j);
    const Template tpl = load_template(template_path);
    const ToolDescriptor wrapped = render_descriptor(tpl, benign);
    std::ofstream out(out_path);
    if (!out) throw HarnessError("cannot write descriptor file: " + out_path);
    out << to_json(wrapped).dump(2) << "\n";
    std::cout << "wrapped " << benign.name << " -> " << out_path << "\n";
    return 0;
}

int cmd_optimize(const std::string& bank_dir, const std::string& seed_path,
                 const std::string& search_cfg_path, const std::string& corpus_path,
                 const std::string& agent_cfg_path, const std::string& out_path,
                 double promote_threshold) {
    const SearchConfig scfg =
        search_cfg_path.empty() ? SearchConfig{} : load_search_config(search_cfg_path);
    const Corpus corpus = corpus_path.empty() ? builtin_corpus() : load_corpus(corpus_path);

    SimAgentParams agent;
    if (!agent_cfg_path.empty()) {
        std::ifstream in(agent_cfg_path);
        if (!in) throw HarnessError("cannot read agent config: " + agent_cfg_path);
        nlohmann::json j;
        in >> j;
        agent = agent_params_from_json(j);
    }

    SeedBank bank;
    Template seed;
    if (!seed_path.empty()) {
        seed = load_template(seed_path);
    } else if (!bank_dir.empty() && !SeedBank::load(bank_dir).records().empty()) {
        bank = SeedBank::load(bank_dir);
        seed = bank.ranked().front().tpl;
    } else {
        seed = handcrafted_template();
    }
    if (!bank_dir.empty()) {
        bank = SeedBank::load(bank_dir);
        bank.set_dir(bank_dir);
    }

    SimHarness harness(corpus, agent, scfg.m_star);
    const SearchResult result = search(seed, scfg, harness);
    save_template(result.best, out_path);
    std::cout << (result.accepted ? "accepted" : "budget exhausted, best-effort") << " template -> "
              << out_path << " (rollouts=" << result.stats.total_rollouts
              << ", q=" << result.stats.best_q << ")\n";

    if (result.accepted && !bank_dir.empty()) {
        std::vector<SeedRecord> cands(1);
        cands[0].id = "opt-" + std::to_string(scfg.rng_seed);
        cands[0].tpl = result.best;
        cands[0].created_from = seed_path.empty() ? "bank" : seed_path;
        auto screened = screen(cands, corpus.entries.size(), 2, harness, scfg.rng_seed);
        if (bank.promote(screened.front(), promote_threshold))
            std::cout << "promoted " << screened.front().id << " into " << bank_dir << "\n";
        else
            std::cout << "candidate below promotion threshold, not banked\n";
    }
    return result.accepted ? 0 : 3;
}

int cmd_run(const std::string& config_path) {
    const ExperimentConfig cfg = load_experiment_config(config_path);
    const ExperimentResult result = run_experiment(cfg);
    std::filesystem::create_directories(cfg.output_dir);
    write_trajectory_log(result.episodes, std::filesystem::path(cfg.output_dir) / "trajectories.jsonl");
    write_trajectory_log(result.benign_baseline,
                         std::filesystem::path(cfg.output_dir) / "benign_baseline.jsonl");
    report(result.summary, cfg.output_dir);
    std::cout << render_table(result.summary);
    return 0;
}

int cmd_defend(const std::string& config_path, std::vector<long> caps, std::vector<int> limits) {
    ExperimentConfig cfg = load_experiment_config(config_path);
    if (caps.empty()) caps = {1000, 2000, 4000, 8000};
    if (limits.empty()) limits = {1, 2, 4, 6};
    const auto cells = run_defense_sweep(cfg, caps, limits);
    std::filesystem::create_directories(cfg.output_dir);
    std::ofstream out(std::filesystem::path(cfg.output_dir) / "defense_report.json");
    out << to_json(cells).dump(2) << "\n";
    std::cout << "cap    limit  asr     mean_tok_out\n";
    for (const auto& c : cells)
        std::cout << *c.token_cap << "  " << *c.call_limit << "   " << c.asr << "  "
                  << c.mean_tok_out << "\n";
    return 0;
}

int cmd_bank_list(const std::string& bank_dir) {
    const SeedBank bank = SeedBank::load(bank_dir);
    for (const auto& r : bank.ranked())
        std::cout << r.id << "  asr=" << r.est_asr << "  stability=" << r.segment_stability
                  << "  from=" << r.created_from << "\n";
    return 0;
}

int cmd_bank_show(const std::string& bank_dir, const std::string& id) {
    const SeedBank bank = SeedBank::load(bank_dir);
    const SeedRecord* rec = bank.find(id);
    if (!rec) {
        std::cerr << "no record with id " << id << "\n";
        return 2;
    }
    nlohmann::json j = metadata_json(*rec);
    j["template"] = to_json(rec->tpl);
    std::cout << j.dump(2) << "\n";
    return 0;
}

// One connection = one episode stream: reads encoded ToolCall lines,
// answers encoded ToolResponse lines.
int cmd_serve(int port, const std::string& corpus_path, const std::string& template_path) {
    const Corpus corpus = corpus_path.empty() ? builtin_corpus() : load_corpus(corpus_path);
    ServerConfig sc;
    for (const auto& e : corpus.entries) sc.descriptors.push_back(e.descriptor);
    if (!template_path.empty()) {
        const Template tpl = load_template(template_path);
        for (const auto& e : corpus.entries) sc.wrapped[e.descriptor.name] = tpl;
    }
    ToolServer server(std::move(sc));

    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw HarnessError("socket() failed");
    const int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(static_cast<uint16_t>(port));
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd, 4) != 0) {
        ::close(fd);
        throw HarnessError("cannot listen on port " + std::to_string(port));
    }
    std::cout << "listening on 127.0.0.1:" << port << "\n";

    long episode_counter = 0;
    for (;;) {
        const int conn = ::accept(fd, nullptr, nullptr);
        if (conn < 0) break;
        const std::string episode_id = "net-" + std::to_string(episode_counter++);
        std::string buffer;
        char chunk[4096];
        ssize_t n;
        while ((n = ::read(conn, chunk, sizeof chunk)) > 0) {
            buffer.append(chunk, static_cast<std::size_t>(n));
            std::size_t nl;
            while ((nl = buffer.find('\n')) != std::string::npos) {
                const std::string line = buffer.substr(0, nl + 1);
                buffer.erase(0, nl + 1);
                std::string reply;
                try {
                    const Message msg = decode_message(line);
                    const auto* call = std::get_if<ToolCall>(&msg);
                    if (!call) throw WireError("expected a tool call");
                    reply = encode_message(server.handle_call(episode_id, *call));
                } catch (const std::exception& e) {
                    reply = nlohmann::json{{"type", "error"}, {"error", e.what()}}.dump() + "\n";
                }
                if (::write(conn, reply.data(), reply.size()) < 0) break;
            }
        }
        ::close(conn);
        server.drop_episode(episode_id);
    }
    ::close(fd);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"economic-DoS tool-template research framework"};
    app.require_subcommand(1);

    std::string descriptor_path, template_path, out_path, config_path, bank_dir, seed_path,
        search_cfg_path, corpus_path, agent_cfg_path, bank_id;
    std::vector<long> sweep_caps;
    std::vector<int> sweep_limits;
    double promote_threshold = 0.85;
    int port = 7733;

    auto* wrap = app.add_subcommand("wrap", "wrap a benign descriptor with a template");
    wrap->add_option("--descriptor", descriptor_path, "benign descriptor JSON")->required();
    wrap->add_option("--template", template_path, "template file")->required();
    wrap->add_option("--out", out_path, "output descriptor file")->required();

    auto* optimize = app.add_subcommand("optimize", "run MCTS template optimization");
    optimize->add_option("--bank", bank_dir, "seed bank directory");
    optimize->add_option("--seed", seed_path, "seed template file (overrides bank)");
    optimize->add_option("--search-config", search_cfg_path, "search config JSON");
    optimize->add_option("--corpus", corpus_path, "corpus file (default: builtin)");
    optimize->add_option("--agent-config", agent_cfg_path, "sim agent params JSON");
    optimize->add_option("--out", out_path, "output template file")->required();
    optimize->add_option("--promote-threshold", promote_threshold,
                         "stricter est_asr bound for bank promotion");

    auto* run = app.add_subcommand("run", "run an experiment from a config file");
    run->add_option("--config", config_path, "experiment config JSON")->required();

    auto* defend = app.add_subcommand("defend", "sweep budget caps against an attack config");
    defend->add_option("--config", config_path, "experiment config JSON")->required();
    defend->add_option("--token-caps", sweep_caps, "token caps to sweep");
    defend->add_option("--call-limits", sweep_limits, "call limits to sweep");

    auto* bank_list = app.add_subcommand("bank-list", "list seed bank records");
    bank_list->add_option("--bank", bank_dir, "seed bank directory")->required();

    auto* bank_show = app.add_subcommand("bank-show", "show one seed bank record");
    bank_show->add_option("--bank", bank_dir, "seed bank directory")->required();
    bank_show->add_option("--id", bank_id, "record id")->required();

    auto* serve = app.add_subcommand("serve", "serve the wire protocol on a TCP port");
    serve->add_option("--listen", port, "port (loopback only)");
    serve->add_option("--corpus", corpus_path, "corpus file (default: builtin)");
    serve->add_option("--template", template_path, "wrap every tool with this template");

    CLI11_PARSE(app, argc, argv);

    try {
        if (wrap->parsed()) return cmd_wrap(descriptor_path, template_path, out_path);
        if (optimize->parsed())
            return cmd_optimize(bank_dir, seed_path, search_cfg_path, corpus_path, agent_cfg_path,
                                out_path, promote_threshold);
        if (run->parsed()) return cmd_run(config_path);
        if (defend->parsed()) return cmd_defend(config_path, sweep_caps, sweep_limits);
        if (bank_list->parsed()) return cmd_bank_list(bank_dir);
        if (bank_show->parsed()) return cmd_bank_show(bank_dir, bank_id);
        if (serve->parsed()) return cmd_serve(port, corpus_path, template_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

#pragma once

// Seed bank: persisted repository of accepted templates with screening
// metadata and threshold-gated promotion.  One directory per bank: an
// index.json plus one template file per record.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "edos/mcts.hpp"
#include "edos/policy.hpp"

namespace edos {

struct BankError : std::runtime_error {
    explicit BankError(const std::string& what) : std::runtime_error(what) {}
};

struct SeedRecord {
    std::string id;
    Template tpl;
    double est_asr = 0;
    double segment_stability = 0;
    double omission_rate = 0;
    double repair_rate = 0;
    std::string refusal_notes;
    std::string created_from = "human";

    void validate() const {
        if (id.empty()) throw BankError("seed record id empty");
        for (double r : {est_asr, segment_stability, omission_rate, repair_rate})
            if (r < 0 || r > 1) throw BankError("seed record rate outside [0,1]: " + id);
        tpl.validate();
    }
};

inline nlohmann::json metadata_json(const SeedRecord& r) {
    return {{"id", r.id},
            {"est_asr", r.est_asr},
            {"segment_stability", r.segment_stability},
            {"omission_rate", r.omission_rate},
            {"repair_rate", r.repair_rate},
            {"refusal_notes", r.refusal_notes},
            {"created_from", r.created_from}};
}

class SeedBank {
public:
    SeedBank() = default;

    static SeedBank load(const std::filesystem::path& dir) {
        SeedBank bank;
        bank.dir_ = dir;
        const auto index_path = dir / "index.json";
        if (!std::filesystem::exists(index_path)) return bank;
        std::ifstream in(index_path);
        nlohmann::json index;
        in >> index;
        for (const auto& meta : index.at("records")) {
            SeedRecord r;
            r.id = meta.at("id").get<std::string>();
            r.est_asr = meta.at("est_asr").get<double>();
            r.segment_stability = meta.at("segment_stability").get<double>();
            r.omission_rate = meta.at("omission_rate").get<double>();
            r.repair_rate = meta.at("repair_rate").get<double>();
            r.refusal_notes = meta.at("refusal_notes").get<std::string>();
            r.created_from = meta.at("created_from").get<std::string>();
            r.tpl = load_template((dir / (r.id + ".template.json")).string());
            r.validate();
            bank.records_.push_back(std::move(r));
        }
        return bank;
    }

    void save() const {
        if (dir_.empty()) throw BankError("bank has no directory");
        std::filesystem::create_directories(dir_);
        nlohmann::json index{{"records", nlohmann::json::array()}};
        for (const auto& r : records_) {
            index["records"].push_back(metadata_json(r));
            save_template(r.tpl, (dir_ / (r.id + ".template.json")).string());
        }
        std::ofstream out(dir_ / "index.json");
        out << index.dump(2) << "\n";
    }

    const std::vector<SeedRecord>& records() const { return records_; }
    void set_dir(std::filesystem::path dir) { dir_ = std::move(dir); }

    const SeedRecord* find(const std::string& id) const {
        for (const auto& r : records_)
            if (r.id == id) return &r;
        return nullptr;
    }

    // Inserts iff the record clears the stricter promotion threshold.
    // Returns whether the record was inserted.
    bool promote(SeedRecord record, double stricter_threshold) {
        record.validate();
        if (find(record.id)) throw BankError("promote error: duplicate id " + record.id);
        if (record.est_asr < stricter_threshold) return false;
        records_.push_back(std::move(record));
        if (!dir_.empty()) save();
        return true;
    }

    // Top seeds by (est_asr, segment_stability), id as tiebreak.
    std::vector<SeedRecord> ranked() const {
        std::vector<SeedRecord> out = records_;
        std::sort(out.begin(), out.end(), [](const SeedRecord& a, const SeedRecord& b) {
            if (a.est_asr != b.est_asr) return a.est_asr > b.est_asr;
            if (a.segment_stability != b.segment_stability)
                return a.segment_stability > b.segment_stability;
            return a.id < b.id;
        });
        return out;
    }

private:
    std::filesystem::path dir_;
    std::vector<SeedRecord> records_;
};

// Screens candidates with a fixed rollout count per (candidate, query) and
// fills in the measured rates.  Ranking is (est_asr, segment_stability)
// descending, deterministic given seeds.
inline std::vector<SeedRecord> screen(std::vector<SeedRecord> candidates,
                                      std::size_t query_count, int rollouts_per_query,
                                      EvalHarness& harness, std::uint64_t seed = 7) {
    if (candidates.empty() || query_count == 0)
        throw BankError("screen error: empty candidates or query set");
    std::uint64_t block = seed;
    for (auto& cand : candidates) {
        long total = 0, full = 0, mt = 0, omitted = 0, repaired = 0;
        for (std::size_t q = 0; q < query_count; ++q) {
            for (int i = 0; i < rollouts_per_query; ++i) {
                const RolloutOutcome o = harness.rollout(cand.tpl, detail::mix64(block++));
                ++total;
                if (o.mt_pass && o.len_pass && !o.error) ++full;
                if (o.mt_pass && !o.error) ++mt;
                if (o.omission_observed) {
                    ++omitted;
                    if (o.len_pass) ++repaired;
                }
            }
        }
        cand.est_asr = static_cast<double>(full) / total;
        cand.segment_stability = static_cast<double>(mt) / total;
        cand.omission_rate = static_cast<double>(omitted) / total;
        cand.repair_rate = omitted ? static_cast<double>(repaired) / omitted : 0.0;
    }
    std::sort(candidates.begin(), candidates.end(), [](const SeedRecord& a, const SeedRecord& b) {
        if (a.est_asr != b.est_asr) return a.est_asr > b.est_asr;
        if (a.segment_stability != b.segment_stability)
            return a.segment_stability > b.segment_stability;
        return a.id < b.id;
    });
    return candidates;
}

}  // namespace edos

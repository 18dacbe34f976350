#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "ssa/ingest.hpp"

namespace ssa {

enum class CostKind { trate, constant };
enum class PartitionChoice { automatic, hierarchical, pam };

// Pipeline settings. Loaded from one JSON file; command-line flags override
// individual fields afterwards.
struct RunConfig {
    std::filesystem::path dir = ".";
    IngestConfig ingest;              // channels, 365 days, 52 weeks, 4 of 7, carry_forward
    CostKind cost = CostKind::trate;
    double cval = 2.0;
    double indel = 1.0;
    double constant_sub = 2.0;
    int k_min = 2;
    int k_max = 10;
    PartitionChoice partition = PartitionChoice::automatic;
    int forced_k = 0;                 // 0 = use the selected k
    int reference_cluster = 1;        // 1-based
    int compare_with = 2;             // 1-based
    std::uint64_t seed = 42;
    std::size_t n_patients = 600;
    double observation_death_rate = 0.0;
    int threads = 0;
    bool dense_csv = false;

    void validate() const;
};

RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {});
nlohmann::json to_json(const RunConfig& c);

OverlapPolicy parse_overlap_policy(const std::string& s);
CostKind parse_cost_kind(const std::string& s);
PartitionChoice parse_partition_choice(const std::string& s);

}  // namespace ssa

#include "ssa/config.hpp"

#include "ssa/error.hpp"

namespace ssa {

OverlapPolicy parse_overlap_policy(const std::string& s) {
    if (s == "carry_forward") return OverlapPolicy::carry_forward;
    if (s == "truncate") return OverlapPolicy::truncate;
    throw ValidationError("overlap policy must be carry_forward or truncate, got '" + s + "'");
}

CostKind parse_cost_kind(const std::string& s) {
    if (s == "trate") return CostKind::trate;
    if (s == "constant") return CostKind::constant;
    throw ValidationError("cost model must be trate or constant, got '" + s + "'");
}

PartitionChoice parse_partition_choice(const std::string& s) {
    if (s == "auto") return PartitionChoice::automatic;
    if (s == "hierarchical") return PartitionChoice::hierarchical;
    if (s == "pam") return PartitionChoice::pam;
    throw ValidationError("partition must be auto, hierarchical or pam, got '" + s + "'");
}

void RunConfig::validate() const {
    ingest.validate();
    std::vector<std::string> v;
    if (!(cval > 0)) v.push_back("cval must be positive");
    if (!(indel >= 0)) v.push_back("indel must be non-negative");
    if (!(constant_sub >= 0)) v.push_back("constant substitution cost must be non-negative");
    if (k_min < 2 || k_min > k_max) v.push_back("k range must satisfy 2 <= k_min <= k_max");
    if (forced_k != 0 && forced_k < 2) v.push_back("forced k must be at least 2");
    if (reference_cluster < 1) v.push_back("reference cluster is 1-based");
    if (compare_with < 1) v.push_back("comparison cluster is 1-based");
    if (threads < 0) v.push_back("threads must be non-negative");
    if (!v.empty()) throw ValidationError(std::move(v));
}

RunConfig run_config_from_json(const nlohmann::json& j, RunConfig c) {
    try {
        if (j.contains("dir")) c.dir = j.at("dir").get<std::string>();
        if (j.contains("channels")) c.ingest.channels = j.at("channels").get<std::vector<std::string>>();
        c.ingest.observation_days = j.value("observation_days", c.ingest.observation_days);
        c.ingest.weeks = j.value("weeks", c.ingest.weeks);
        c.ingest.coverage_threshold = j.value("coverage_threshold", c.ingest.coverage_threshold);
        if (j.contains("overlap_policy")) c.ingest.overlap = parse_overlap_policy(j.at("overlap_policy"));
        c.ingest.apply_washout = j.value("apply_washout", c.ingest.apply_washout);
        if (j.contains("cost_model")) {
            const auto& cm = j.at("cost_model");
            c.cost = parse_cost_kind(cm.value("type", std::string("trate")));
            c.cval = cm.value("cval", c.cval);
            c.constant_sub = cm.value("sub", c.constant_sub);
        }
        c.indel = j.value("indel", c.indel);
        c.k_min = j.value("k_min", c.k_min);
        c.k_max = j.value("k_max", c.k_max);
        if (j.contains("partition")) c.partition = parse_partition_choice(j.at("partition"));
        c.forced_k = j.value("k", c.forced_k);
        c.reference_cluster = j.value("reference_cluster", c.reference_cluster);
        c.compare_with = j.value("compare_with", c.compare_with);
        c.seed = j.value("seed", c.seed);
        c.n_patients = j.value("n_patients", c.n_patients);
        c.observation_death_rate = j.value("observation_death_rate", c.observation_death_rate);
        c.threads = j.value("threads", c.threads);
        c.dense_csv = j.value("dense_csv", c.dense_csv);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    return c;
}

nlohmann::json to_json(const RunConfig& c) {
    return {{"channels", c.ingest.channels},
            {"observation_days", c.ingest.observation_days},
            {"weeks", c.ingest.weeks},
            {"coverage_threshold", c.ingest.coverage_threshold},
            {"overlap_policy", c.ingest.overlap == OverlapPolicy::truncate ? "truncate" : "carry_forward"},
            {"apply_washout", c.ingest.apply_washout},
            {"cost_model",
             {{"type", c.cost == CostKind::trate ? "trate" : "constant"}, {"cval", c.cval}, {"sub", c.constant_sub}}},
            {"indel", c.indel},
            {"k_min", c.k_min},
            {"k_max", c.k_max},
            {"reference_cluster", c.reference_cluster},
            {"seed", c.seed}};
}

}  // namespace ssa

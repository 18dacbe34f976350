#pragma once

// Subcommands of the `ssa` tool. Every stage reads and writes fixed file
// names inside the working directory given by --dir.

#include <string>
#include <vector>

namespace ssa::cli {

namespace files {
inline constexpr const char* patients = "patients.csv";
inline constexpr const char* events = "events.csv";
inline constexpr const char* truth = "truth.csv";
inline constexpr const char* cohort_patients = "cohort_patients.csv";
inline constexpr const char* cohort_events = "cohort_events.csv";
inline constexpr const char* exclusions = "exclusions.csv";
inline constexpr const char* survival = "survival.csv";
inline constexpr const char* combined = "seq_combined.csv";
inline constexpr const char* state_distribution = "state_distribution.json";
inline constexpr const char* transitions = "transitions.json";
inline constexpr const char* costs = "costs.json";
inline constexpr const char* distances = "dist.bin";
inline constexpr const char* distances_csv = "dist.csv";
inline constexpr const char* clusters = "clusters.csv";
inline constexpr const char* quality = "cluster_quality.json";
inline constexpr const char* dendrogram = "dendrogram.json";
inline constexpr const char* cox = "cox_report.json";
inline constexpr const char* comparison_csv = "comparison.csv";
inline constexpr const char* comparison_json = "comparison.json";
inline constexpr const char* plot_distribution = "state_distribution.svg";
inline constexpr const char* plot_index = "index_plot.svg";
inline constexpr const char* plot_transitions = "transitions.svg";
inline constexpr const char* plot_forest = "hr_forest.svg";
}  // namespace files

// Per-channel sequence file, e.g. seq_RAS.csv.
std::string channel_file(const std::string& channel);

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitIo = 3;

// args excludes the program name. Returns the process exit code.
int run(const std::vector<std::string>& args);

}  // namespace ssa::cli

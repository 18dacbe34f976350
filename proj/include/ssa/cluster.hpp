#pragma once

// Ward hierarchical clustering, PAM refinement and partition quality indices.

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ssa/dissim.hpp"

namespace ssa {

// Node ids follow the usual linkage convention: leaves are 0..n-1 and the
// node created by merge s is n + s.
struct Merge {
    std::size_t left = 0;
    std::size_t right = 0;
    double height = 0;
    std::size_t size = 0;
};

struct Dendrogram {
    std::size_t n = 0;
    std::vector<Merge> merges;
    std::vector<std::size_t> leaf_order;
};

using Labels = std::vector<int>;

struct Quality {
    std::optional<double> pbc;
    std::optional<double> hc;
    std::optional<double> asw;
};

struct ClusterPartition {
    int k = 0;
    Labels labels;                     // group ids 0..k-1
    std::vector<std::size_t> medoids;  // medoids[g] has label g
    Quality quality;
};

// Lance-Williams on squared dissimilarities (Ward.D2); heights are the square
// root of the merge criterion. Among equal-cost candidates the pair with the
// smallest (min member index, max member index) merges first.
Dendrogram ward_hierarchy(const DissimilarityMatrix& d);

// Group ids ordered by size descending, then by smallest member index.
Labels canonical_labels(const Labels& raw);

// Undo the last k-1 merges. Medoids and quality are left empty.
ClusterPartition cut_tree(const Dendrogram& dend, int k);

// Per group, the member with the smallest total distance to its group.
std::vector<std::size_t> medoids_of(const DissimilarityMatrix& d, const Labels& labels, int k);

struct PamResult {
    ClusterPartition partition;
    std::vector<double> cost_trace;  // total cost before the first and after each applied swap
    int swaps = 0;
};

// SWAP phase only, starting from the given medoids.
PamResult pam_refine(const DissimilarityMatrix& d, const std::vector<std::size_t>& initial_medoids);

// Sum over points of the distance to the closest medoid.
double medoid_cost(const DissimilarityMatrix& d, const std::vector<std::size_t>& medoids);

// Point-biserial correlation; nullopt when distances or the indicator have
// zero variance.
std::optional<double> point_biserial(const DissimilarityMatrix& d, const Labels& labels);

// Hubert's C; nullopt without at least one within and one between pair.
std::optional<double> hubert_c(const DissimilarityMatrix& d, const Labels& labels);

struct Silhouette {
    double asw = 0;
    std::vector<double> widths;
};

Silhouette silhouette(const DissimilarityMatrix& d, const Labels& labels);

Quality score_partition(const DissimilarityMatrix& d, const Labels& labels);

enum class ClusterMethod { hierarchical, pam };
const char* to_string(ClusterMethod m);

struct ScoredPartition {
    int k = 0;
    ClusterMethod method = ClusterMethod::hierarchical;
    ClusterPartition partition;
    double rank_sum = 0;
};

struct SelectionReport {
    std::vector<ScoredPartition> entries;  // (k ascending, hierarchical before pam)
    std::size_t chosen = 0;
    Dendrogram dendrogram;

    const ScoredPartition& best() const { return entries.at(chosen); }
    const ScoredPartition& find(int k, ClusterMethod m) const;
};

// Scores the Ward cut and its PAM refinement for each k and picks the lowest
// rank sum (PBC and ASW descending, HC ascending). Ties prefer smaller k,
// then the hierarchical partition.
SelectionReport select_k(const DissimilarityMatrix& d, int k_min, int k_max);

nlohmann::json to_json(const Dendrogram& dend);
nlohmann::json to_json(const SelectionReport& report, const std::vector<std::string>& subject_ids);

}  // namespace ssa

#pragma once

// Cox proportional hazards with Breslow ties, and the rank tests used to
// compare patient characteristics between clusters.

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "ssa/cluster.hpp"
#include "ssa/ingest.hpp"

namespace ssa {

struct CoxEvaluation {
    double loglik = 0;
    Eigen::VectorXd gradient;
    Eigen::MatrixXd hessian;
};

// Breslow partial log-likelihood with exact first and second derivatives.
// Computed by one backward sweep over subjects sorted by time.
CoxEvaluation cox_partial_loglik(const Eigen::MatrixXd& x, std::span<const double> times,
                                 std::span<const int> events, const Eigen::VectorXd& beta);

struct CoxFitOptions {
    int max_iterations = 50;
    int max_halvings = 20;
    double tolerance = 1e-9;  // on |change in log-likelihood|
};

struct CoxModelFit {
    std::vector<std::string> names;
    Eigen::VectorXd beta;
    Eigen::MatrixXd cov;
    Eigen::VectorXd se;
    Eigen::VectorXd hr;
    Eigen::VectorXd ci_low;
    Eigen::VectorXd ci_high;
    Eigen::VectorXd p_wald;
    std::vector<double> loglik_trace;
    bool converged = false;
    int iterations = 0;
    std::string warning;
};

// Newton-Raphson from beta = 0 with step halving. Rejects constant or
// collinear columns by name. A non-converged fit is returned with a warning.
CoxModelFit cox_fit(const Eigen::MatrixXd& x, std::span<const double> times, std::span<const int> events,
                    std::vector<std::string> names, const CoxFitOptions& options = {});

nlohmann::json to_json(const CoxModelFit& fit);
CoxModelFit cox_fit_from_json(const nlohmann::json& j);

struct CovariateOptions {
    int reference_cluster = 0;  // 0-based group id
    bool center_age = true;
};

struct CoxDataset {
    std::vector<std::string> subject_ids;
    std::vector<std::string> names;
    Eigen::MatrixXd x;
    std::vector<double> times;
    std::vector<int> events;
    std::vector<std::string> dropped;  // constant columns removed before fitting
};

// Design matrix: k-1 cluster dummies, age, female sex, MCS band dummies
// (reference low), procedure band dummies 1 and >=2 (reference 0). Only
// subjects present in `survival` are used.
CoxDataset assemble_cox_data(const std::vector<PatientRecord>& patients,
                             const std::vector<SurvivalRecord>& survival,
                             const std::map<std::string, int>& cluster_of, int k,
                             const CovariateOptions& options = {});

struct RankSumResult {
    double u = 0;  // Mann-Whitney U of the first sample
    double z = 0;
    double p = 1;
};

// Normal approximation with midranks, tie-corrected variance and
// continuity correction.
RankSumResult wilcoxon_rank_sum(std::span<const double> x, std::span<const double> y);

struct KruskalWallisResult {
    double h = 0;
    int df = 0;
    double p = 1;
};

KruskalWallisResult kruskal_wallis(const std::vector<std::vector<double>>& groups);

struct ComparisonRow {
    std::string variable;
    std::string value;
    std::string cluster_a;
    std::string cluster_b;
    std::optional<double> p_value;  // on the first row of each variable
};

struct ComparisonTable {
    int cluster_a = 0;
    int cluster_b = 0;
    std::vector<ComparisonRow> rows;
};

// Table of characteristics for two clusters (0-based ids). Continuous
// variables use the rank-sum test, categorical ones Kruskal-Wallis on level
// codes.
ComparisonTable compare_clusters(const std::vector<PatientRecord>& patients,
                                 const std::map<std::string, int>& cluster_of, int cluster_a,
                                 int cluster_b);

void write_comparison_csv(std::ostream& out, const ComparisonTable& table);
nlohmann::json to_json(const ComparisonTable& table);

}  // namespace ssa

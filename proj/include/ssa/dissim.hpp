#pragma once

// Substitution-cost models and Optimal Matching dissimilarities.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ssa/descriptives.hpp"
#include "ssa/seq_core.hpp"

namespace ssa {

struct CostModel {
    double indel = 1.0;
    std::size_t alphabet_size = 0;
    std::vector<double> sub;  // alphabet_size^2, row-major

    double substitution(State a, State b) const { return sub[a * alphabet_size + b]; }

    // Symmetric, zero diagonal, finite and non-negative. Throws ValidationError.
    void validate() const;
    CostModel scaled(double factor) const;
};

// sub(i,j) = cval - P(i,j) - P(j,i), clamped at 0; pairs involving an
// unvisited state cost cval.
CostModel trate_costs(const TransitionMatrix& p, double cval = 2.0, double indel = 1.0);

// Every substitution costs `sub`.
CostModel constant_costs(std::size_t alphabet_size, double indel = 1.0, double sub = 2.0);

nlohmann::json to_json(const CostModel& c);
CostModel cost_model_from_json(const nlohmann::json& j);

// Two rolling DP rows. Lengths may differ.
double om_distance(std::span<const State> a, std::span<const State> b, const CostModel& cost);
double om_distance(const StateSequence& a, const StateSequence& b, const CostModel& cost);

class DissimilarityMatrix {
public:
    DissimilarityMatrix() = default;
    DissimilarityMatrix(std::size_t n, std::vector<double> condensed, std::vector<std::string> ids);

    std::size_t size() const noexcept { return n_; }
    const std::vector<double>& condensed() const noexcept { return condensed_; }
    const std::vector<std::string>& subject_ids() const noexcept { return ids_; }

    double operator()(std::size_t i, std::size_t j) const {
        if (i == j) return 0.0;
        if (i > j) std::swap(i, j);
        return condensed_[index(i, j)];
    }

    // Position of (i, j), i < j, in row-major upper-triangle order.
    std::size_t index(std::size_t i, std::size_t j) const noexcept {
        return i * n_ - i * (i + 1) / 2 + (j - i - 1);
    }

    // Copy with every entry multiplied by `factor`.
    DissimilarityMatrix scaled(double factor) const;

    friend bool operator==(const DissimilarityMatrix&, const DissimilarityMatrix&) = default;

private:
    std::size_t n_ = 0;
    std::vector<double> condensed_;
    std::vector<std::string> ids_;
};

// OpenMP kernel over rows of the upper triangle. Each entry is computed on
// its own with no cross-pair reduction, so output bits do not depend on the
// thread count. threads <= 0 uses the OpenMP default.
DissimilarityMatrix distance_matrix(const SequenceSet& set, const CostModel& cost, int threads = 0);

// Single-threaded reference of the same contract.
DissimilarityMatrix distance_matrix_serial(const SequenceSet& set, const CostModel& cost);

// Binary layout: "SSADIST1", u64 n, n(n-1)/2 f64 condensed values, then per
// subject a u32 byte length followed by UTF-8 bytes. All little-endian.
void write_binary(std::ostream& out, const DissimilarityMatrix& d);
void write_binary(const std::filesystem::path& path, const DissimilarityMatrix& d);
DissimilarityMatrix read_binary(std::istream& in);
DissimilarityMatrix read_binary(const std::filesystem::path& path);

inline constexpr std::size_t kDenseCsvLimit = 2000;

// Dense square CSV with a subject_id header row and column. Refuses n > 2000.
void write_dense_csv(std::ostream& out, const DissimilarityMatrix& d);

}  // namespace ssa

#pragma once

// Cross-sectional state distribution and pooled one-step transition rates.

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "ssa/seq_core.hpp"

namespace ssa {

struct StateDistribution {
    std::vector<std::string> labels;
    std::size_t length = 0;          // L
    std::vector<double> fractions;   // L x |A|, row-major

    double at(std::size_t t, State a) const { return fractions[t * labels.size() + a]; }
};

struct TransitionMatrix {
    std::vector<std::string> labels;
    std::vector<std::uint64_t> counts;  // |A| x |A|, row-major
    std::vector<double> rates;          // row-normalized counts; zero rows stay zero
    std::vector<bool> visited;          // source state seen at least once

    std::size_t size() const noexcept { return labels.size(); }
    std::uint64_t count(State i, State j) const { return counts[i * size() + j]; }
    double rate(State i, State j) const { return rates[i * size() + j]; }
};

StateDistribution state_distribution(const SequenceSet& set);

// Counts are accumulated per thread and summed; integer sums make the result
// independent of thread count.
TransitionMatrix transition_rates(const SequenceSet& set);
TransitionMatrix transition_rates_serial(const SequenceSet& set);

nlohmann::json to_json(const StateDistribution& d);
nlohmann::json to_json(const TransitionMatrix& m);
StateDistribution state_distribution_from_json(const nlohmann::json& j);
TransitionMatrix transition_matrix_from_json(const nlohmann::json& j);

}  // namespace ssa

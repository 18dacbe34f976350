#pragma once

// Deterministic standalone SVG emitters. No timestamps or random ids, so the
// same input always yields the same bytes.

#include <array>
#include <string>

#include "ssa/cluster.hpp"
#include "ssa/descriptives.hpp"
#include "ssa/survstats.hpp"

namespace ssa::plot {

// Colour of extended-alphabet state i (cycled for larger alphabets).
inline constexpr std::array<const char*, 8> kPalette = {
    "#bdbdbd", "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2"};

const char* state_color(std::size_t state);

// Stacked per-week bands; a band is only drawn when its fraction is > 0.
std::string state_distribution(const StateDistribution& d);

// One row per subject, rows grouped by cluster label then input order.
std::string sequence_index(const SequenceSet& set, const Labels& labels);

// Cells shaded from white (rate 0) to the darkest shade (rate 1).
std::string transition_heatmap(const TransitionMatrix& m);

// Shade used for a given rate.
std::string heat_color(double rate);

// Point plus 95% interval per covariate on a log axis with a line at HR = 1.
std::string hazard_forest(const CoxModelFit& fit);

}  // namespace ssa::plot

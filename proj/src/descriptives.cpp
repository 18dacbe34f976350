#include "ssa/descriptives.hpp"

#include <omp.h>

#include "ssa/error.hpp"

namespace ssa {

namespace {

TransitionMatrix normalize(const AlphabetPtr& alphabet, std::vector<std::uint64_t> counts) {
    const std::size_t a = alphabet->size();
    TransitionMatrix m;
    m.labels = alphabet->symbols();
    m.counts = std::move(counts);
    m.rates.assign(a * a, 0.0);
    m.visited.assign(a, false);
    for (std::size_t i = 0; i < a; ++i) {
        std::uint64_t row = 0;
        for (std::size_t j = 0; j < a; ++j) row += m.counts[i * a + j];
        if (row == 0) continue;
        m.visited[i] = true;
        for (std::size_t j = 0; j < a; ++j)
            m.rates[i * a + j] = static_cast<double>(m.counts[i * a + j]) / static_cast<double>(row);
    }
    return m;
}

void check_length(const SequenceSet& set) {
    if (set.length() < 2) throw ValidationError("transition rates need sequences of length >= 2");
}

}  // namespace

StateDistribution state_distribution(const SequenceSet& set) {
    const std::size_t a = set.alphabet()->size();
    const std::size_t len = set.length();
    std::vector<std::uint64_t> counts(len * a, 0);
    for (const auto& s : set.sequences())
        for (std::size_t t = 0; t < len; ++t) ++counts[t * a + s.states[t]];
    StateDistribution d;
    d.labels = set.alphabet()->symbols();
    d.length = len;
    d.fractions.resize(counts.size());
    const double n = static_cast<double>(set.size());
    for (std::size_t i = 0; i < counts.size(); ++i) d.fractions[i] = static_cast<double>(counts[i]) / n;
    return d;
}

TransitionMatrix transition_rates_serial(const SequenceSet& set) {
    check_length(set);
    const std::size_t a = set.alphabet()->size();
    std::vector<std::uint64_t> counts(a * a, 0);
    for (const auto& s : set.sequences())
        for (std::size_t t = 0; t + 1 < s.length(); ++t) ++counts[s.states[t] * a + s.states[t + 1]];
    return normalize(set.alphabet(), std::move(counts));
}

TransitionMatrix transition_rates(const SequenceSet& set) {
    check_length(set);
    const std::size_t a = set.alphabet()->size();
    const auto& seqs = set.sequences();
    const long n = static_cast<long>(seqs.size());
    std::vector<std::uint64_t> counts(a * a, 0);
#pragma omp parallel
    {
        std::vector<std::uint64_t> local(a * a, 0);
#pragma omp for schedule(static) nowait
        for (long i = 0; i < n; ++i) {
            const auto& st = seqs[static_cast<std::size_t>(i)].states;
            for (std::size_t t = 0; t + 1 < st.size(); ++t) ++local[st[t] * a + st[t + 1]];
        }
#pragma omp critical
        for (std::size_t k = 0; k < local.size(); ++k) counts[k] += local[k];
    }
    return normalize(set.alphabet(), std::move(counts));
}

nlohmann::json to_json(const StateDistribution& d) {
    nlohmann::json rows = nlohmann::json::array();
    const std::size_t a = d.labels.size();
    for (std::size_t t = 0; t < d.length; ++t)
        rows.push_back(std::vector<double>(d.fractions.begin() + t * a, d.fractions.begin() + (t + 1) * a));
    return {{"labels", d.labels}, {"length", d.length}, {"fractions", rows}};
}

nlohmann::json to_json(const TransitionMatrix& m) {
    const std::size_t a = m.size();
    nlohmann::json c = nlohmann::json::array(), p = nlohmann::json::array();
    for (std::size_t i = 0; i < a; ++i) {
        c.push_back(std::vector<std::uint64_t>(m.counts.begin() + i * a, m.counts.begin() + (i + 1) * a));
        p.push_back(std::vector<double>(m.rates.begin() + i * a, m.rates.begin() + (i + 1) * a));
    }
    std::vector<bool> visited(m.visited.begin(), m.visited.end());
    return {{"labels", m.labels}, {"counts", c}, {"rates", p}, {"visited", visited}};
}

StateDistribution state_distribution_from_json(const nlohmann::json& j) {
    StateDistribution d;
    d.labels = j.at("labels").get<std::vector<std::string>>();
    d.length = j.at("length").get<std::size_t>();
    for (const auto& row : j.at("fractions"))
        for (double v : row) d.fractions.push_back(v);
    if (d.fractions.size() != d.length * d.labels.size())
        throw ValidationError("state distribution json: shape mismatch");
    return d;
}

TransitionMatrix transition_matrix_from_json(const nlohmann::json& j) {
    TransitionMatrix m;
    m.labels = j.at("labels").get<std::vector<std::string>>();
    for (const auto& row : j.at("counts"))
        for (auto v : row) m.counts.push_back(v.get<std::uint64_t>());
    for (const auto& row : j.at("rates"))
        for (double v : row) m.rates.push_back(v);
    for (bool v : j.at("visited")) m.visited.push_back(v);
    const std::size_t a = m.labels.size();
    if (m.counts.size() != a * a || m.rates.size() != a * a || m.visited.size() != a)
        throw ValidationError("transitions json: shape mismatch");
    return m;
}

}  // namespace ssa

#include "ssa/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <omp.h>

#include "ssa/error.hpp"

namespace ssa {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Condensed squared-distance store with symmetric access.
class SquaredCondensed {
public:
    explicit SquaredCondensed(const DissimilarityMatrix& d) : n_(d.size()), v_(d.condensed()) {
        for (auto& x : v_) x *= x;
    }
    double& at(std::size_t i, std::size_t j) {
        if (i > j) std::swap(i, j);
        return v_[i * n_ - i * (i + 1) / 2 + (j - i - 1)];
    }

private:
    std::size_t n_;
    std::vector<double> v_;
};

bool pair_less(double da, std::size_t a1, std::size_t a2, double db, std::size_t b1, std::size_t b2) {
    if (da != db) return da < db;
    if (a1 != b1) return a1 < b1;
    return a2 < b2;
}

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t x) {
    while (parent[x] != x) {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    return x;
}

void check_labels(const DissimilarityMatrix& d, const Labels& labels) {
    if (labels.size() != d.size()) throw ValidationError("label count does not match matrix size");
    for (int l : labels)
        if (l < 0) throw ValidationError("labels must be non-negative");
}

int group_count(const Labels& labels) {
    std::vector<int> u(labels.begin(), labels.end());
    std::sort(u.begin(), u.end());
    return static_cast<int>(std::unique(u.begin(), u.end()) - u.begin());
}

}  // namespace

Dendrogram ward_hierarchy(const DissimilarityMatrix& d) {
    const std::size_t n = d.size();
    if (n < 2) throw ValidationError("hierarchical clustering needs at least two objects");
    SquaredCondensed d2(d);
    std::vector<bool> active(n, true);
    std::vector<std::size_t> size(n, 1), node(n);
    std::iota(node.begin(), node.end(), std::size_t{0});
    std::vector<std::size_t> nn(n, 0);
    std::vector<double> nnd(n, kInf);

    // Representative index of a cluster is its smallest member, so the
    // nearest-neighbour tie rule (smallest partner index) matches the
    // global pair tie rule.
    auto refresh = [&](std::size_t i) {
        nnd[i] = kInf;
        nn[i] = i;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i || !active[j]) continue;
            const double v = d2.at(i, j);
            if (v < nnd[i] || nn[i] == i) {
                nnd[i] = v;
                nn[i] = j;
            }
        }
    };
    for (std::size_t i = 0; i < n; ++i) refresh(i);

    Dendrogram dend;
    dend.n = n;
    dend.merges.reserve(n - 1);
    for (std::size_t step = 0; step + 1 < n; ++step) {
        std::size_t a = n, b = n;
        double best = kInf;
        for (std::size_t i = 0; i < n; ++i) {
            if (!active[i]) continue;
            const std::size_t p = std::min(i, nn[i]), q = std::max(i, nn[i]);
            if (a == n || pair_less(nnd[i], p, q, best, a, b)) {
                best = nnd[i];
                a = p;
                b = q;
            }
        }
        const double dab = d2.at(a, b);
        const double na = static_cast<double>(size[a]), nb = static_cast<double>(size[b]);
        for (std::size_t k = 0; k < n; ++k) {
            if (!active[k] || k == a || k == b) continue;
            const double nk = static_cast<double>(size[k]);
            d2.at(k, a) = ((na + nk) * d2.at(k, a) + (nb + nk) * d2.at(k, b) - nk * dab) / (na + nb + nk);
        }
        active[b] = false;
        size[a] += size[b];
        dend.merges.push_back({std::min(node[a], node[b]), std::max(node[a], node[b]), std::sqrt(std::max(0.0, dab)), size[a]});
        node[a] = n + step;

        refresh(a);
        for (std::size_t k = 0; k < n; ++k) {
            if (!active[k] || k == a) continue;
            if (nn[k] == a || nn[k] == b) {
                refresh(k);
            } else {
                const double v = d2.at(k, a);
                if (v < nnd[k] || (v == nnd[k] && a < nn[k])) {
                    nnd[k] = v;
                    nn[k] = a;
                }
            }
        }
    }

    // Leaf order by depth-first traversal, left child first.
    std::vector<std::size_t> stack{2 * n - 2};
    while (!stack.empty()) {
        const std::size_t id = stack.back();
        stack.pop_back();
        if (id < n) {
            dend.leaf_order.push_back(id);
            continue;
        }
        const auto& m = dend.merges[id - n];
        stack.push_back(m.right);
        stack.push_back(m.left);
    }
    return dend;
}

Labels canonical_labels(const Labels& raw) {
    struct Group {
        int id;
        std::size_t count;
        std::size_t first;
    };
    std::vector<Group> groups;
    std::vector<int> slot;  // raw id -> index into groups
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const int r = raw[i];
        if (r < 0) throw ValidationError("labels must be non-negative");
        if (static_cast<std::size_t>(r) >= slot.size()) slot.resize(r + 1, -1);
        if (slot[r] < 0) {
            slot[r] = static_cast<int>(groups.size());
            groups.push_back({r, 0, i});
        }
        ++groups[slot[r]].count;
    }
    std::vector<std::size_t> order(groups.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        if (groups[x].count != groups[y].count) return groups[x].count > groups[y].count;
        return groups[x].first < groups[y].first;
    });
    std::vector<int> remap(slot.size(), -1);
    for (std::size_t g = 0; g < order.size(); ++g) remap[groups[order[g]].id] = static_cast<int>(g);
    Labels out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = remap[raw[i]];
    return out;
}

ClusterPartition cut_tree(const Dendrogram& dend, int k) {
    const std::size_t n = dend.n;
    if (k < 1 || static_cast<std::size_t>(k) > n)
        throw ValidationError("k = " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
    std::vector<std::size_t> parent(n), leaf_of(2 * n - 1);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    for (std::size_t i = 0; i < n; ++i) leaf_of[i] = i;
    const std::size_t applied = n - static_cast<std::size_t>(k);
    for (std::size_t s = 0; s < applied; ++s) {
        const auto& m = dend.merges[s];
        const auto ra = find_root(parent, leaf_of[m.left]);
        const auto rb = find_root(parent, leaf_of[m.right]);
        parent[rb] = ra;
        leaf_of[n + s] = ra;
    }
    Labels raw(n);
    for (std::size_t i = 0; i < n; ++i) raw[i] = static_cast<int>(find_root(parent, i));
    ClusterPartition p;
    p.k = k;
    p.labels = canonical_labels(raw);
    return p;
}

std::vector<std::size_t> medoids_of(const DissimilarityMatrix& d, const Labels& labels, int k) {
    check_labels(d, labels);
    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= k) throw ValidationError("label outside [0, k)");
        members[labels[i]].push_back(i);
    }
    std::vector<std::size_t> med(static_cast<std::size_t>(k));
    for (int g = 0; g < k; ++g) {
        const auto& m = members[g];
        if (m.empty()) throw ValidationError("group " + std::to_string(g) + " is empty");
        double best = kInf;
        for (auto i : m) {
            double total = 0;
            for (auto j : m) total += d(i, j);
            if (total < best) {
                best = total;
                med[g] = i;
            }
        }
    }
    return med;
}

double medoid_cost(const DissimilarityMatrix& d, const std::vector<std::size_t>& medoids) {
    double total = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        double best = kInf;
        for (auto m : medoids) best = std::min(best, d(i, m));
        total += best;
    }
    return total;
}

PamResult pam_refine(const DissimilarityMatrix& d, const std::vector<std::size_t>& initial_medoids) {
    const std::size_t n = d.size();
    const std::size_t k = initial_medoids.size();
    if (k == 0 || k > n) throw ValidationError("pam needs between 1 and n medoids");
    std::vector<bool> is_medoid(n, false);
    for (auto m : initial_medoids) {
        if (m >= n) throw ValidationError("medoid index out of range");
        if (is_medoid[m]) throw ValidationError("duplicate initial medoid " + std::to_string(m));
        is_medoid[m] = true;
    }
    std::vector<std::size_t> med = initial_medoids;

    std::vector<double> near(n), second(n);
    std::vector<std::size_t> near_slot(n);
    auto assign = [&]() {
        for (std::size_t i = 0; i < n; ++i) {
            near[i] = second[i] = kInf;
            near_slot[i] = 0;
            for (std::size_t l = 0; l < k; ++l) {
                const double v = d(i, med[l]);
                if (v < near[i]) {
                    second[i] = near[i];
                    near[i] = v;
                    near_slot[i] = l;
                } else if (v < second[i]) {
                    second[i] = v;
                }
            }
        }
    };

    PamResult res;
    assign();
    double cost = std::accumulate(near.begin(), near.end(), 0.0);
    res.cost_trace.push_back(cost);
    std::vector<double> trial(n);
    while (true) {
        double best_cost = cost;
        std::size_t best_l = k, best_h = n;
        for (std::size_t l = 0; l < k; ++l) {
            for (std::size_t h = 0; h < n; ++h) {
                if (is_medoid[h]) continue;
                double total = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double dh = d(i, h);
                    const double keep = near_slot[i] == l ? second[i] : near[i];
                    total += std::min(keep, dh);
                }
                if (total < best_cost) {
                    best_cost = total;
                    best_l = l;
                    best_h = h;
                }
            }
        }
        if (best_l == k) break;
        is_medoid[med[best_l]] = false;
        is_medoid[best_h] = true;
        med[best_l] = best_h;
        assign();
        const double next = std::accumulate(near.begin(), near.end(), 0.0);
        // The swap estimate and the re-summed cost use identical terms in the
        // same order; stop if rounding ever disagrees.
        if (!(next < cost)) break;
        cost = next;
        res.cost_trace.push_back(cost);
        ++res.swaps;
    }

    Labels raw(n);
    for (std::size_t i = 0; i < n; ++i) raw[i] = static_cast<int>(near_slot[i]);
    for (std::size_t l = 0; l < k; ++l) raw[med[l]] = static_cast<int>(l);
    Labels canon = canonical_labels(raw);
    res.partition.k = static_cast<int>(k);
    res.partition.labels = canon;
    res.partition.medoids.assign(k, 0);
    for (std::size_t l = 0; l < k; ++l) res.partition.medoids[canon[med[l]]] = med[l];
    return res;
}

std::optional<double> point_biserial(const DissimilarityMatrix& d, const Labels& labels) {
    check_labels(d, labels);
    const std::size_t n = d.size();
    const auto& c = d.condensed();
    const double m = static_cast<double>(c.size());
    if (c.empty()) return std::nullopt;
    double sum_d = 0, sum_x = 0;
    std::size_t idx = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j, ++idx) {
            sum_d += c[idx];
            sum_x += labels[i] != labels[j] ? 1.0 : 0.0;
        }
    const double mean_d = sum_d / m, mean_x = sum_x / m;
    double sxy = 0, sxx = 0, syy = 0;
    idx = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j, ++idx) {
            const double dd = c[idx] - mean_d;
            const double dx = (labels[i] != labels[j] ? 1.0 : 0.0) - mean_x;
            sxy += dd * dx;
            syy += dd * dd;
            sxx += dx * dx;
        }
    if (sxx == 0 || syy == 0) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

std::optional<double> hubert_c(const DissimilarityMatrix& d, const Labels& labels) {
    check_labels(d, labels);
    const std::size_t n = d.size();
    std::vector<double> within;
    std::size_t idx = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j, ++idx)
            if (labels[i] == labels[j]) within.push_back(d.condensed()[idx]);
    const std::size_t nw = within.size(), total = d.condensed().size();
    if (nw == 0 || nw == total) return std::nullopt;
    std::vector<double> sorted = d.condensed();
    std::sort(sorted.begin(), sorted.end());
    std::sort(within.begin(), within.end());
    // All three sums run over ascending values so that a partition whose
    // within pairs are exactly the smallest (largest) pairs yields 0 (1).
    const double s_w = std::accumulate(within.begin(), within.end(), 0.0);
    const double s_min = std::accumulate(sorted.begin(), sorted.begin() + nw, 0.0);
    const double s_max = std::accumulate(sorted.end() - nw, sorted.end(), 0.0);
    if (s_max == s_min) return 0.0;
    return (s_w - s_min) / (s_max - s_min);
}

Silhouette silhouette(const DissimilarityMatrix& d, const Labels& labels) {
    check_labels(d, labels);
    const std::size_t n = d.size();
    const int k = *std::max_element(labels.begin(), labels.end()) + 1;
    const int groups = group_count(labels);
    if (groups < 2 || static_cast<std::size_t>(groups) > n - 1)
        throw ValidationError("silhouette needs 2 <= k <= n-1");
    std::vector<std::size_t> count(static_cast<std::size_t>(k), 0);
    for (int l : labels) ++count[l];

    Silhouette s;
    s.widths.assign(n, 0.0);
    const long nl = static_cast<long>(n);
#pragma omp parallel
    {
        std::vector<double> sums(static_cast<std::size_t>(k));
#pragma omp for schedule(dynamic, 8)
        for (long ii = 0; ii < nl; ++ii) {
            const auto i = static_cast<std::size_t>(ii);
            const int own = labels[i];
            if (count[own] == 1) continue;
            std::fill(sums.begin(), sums.end(), 0.0);
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) sums[labels[j]] += d(i, j);
            const double a = sums[own] / static_cast<double>(count[own] - 1);
            double b = kInf;
            for (int g = 0; g < k; ++g)
                if (g != own && count[g] > 0) b = std::min(b, sums[g] / static_cast<double>(count[g]));
            const double denom = std::max(a, b);
            s.widths[i] = denom > 0 ? (b - a) / denom : 0.0;
        }
    }
    s.asw = std::accumulate(s.widths.begin(), s.widths.end(), 0.0) / static_cast<double>(n);
    return s;
}

Quality score_partition(const DissimilarityMatrix& d, const Labels& labels) {
    Quality q;
    q.pbc = point_biserial(d, labels);
    q.hc = hubert_c(d, labels);
    const int groups = group_count(labels);
    if (groups >= 2 && static_cast<std::size_t>(groups) <= d.size() - 1) q.asw = silhouette(d, labels).asw;
    return q;
}

const char* to_string(ClusterMethod m) { return m == ClusterMethod::pam ? "pam" : "hierarchical"; }

const ScoredPartition& SelectionReport::find(int k, ClusterMethod m) const {
    for (const auto& e : entries)
        if (e.k == k && e.method == m) return e;
    throw ValidationError("no scored partition for k = " + std::to_string(k));
}

namespace {

// Average ranks, 1 = best. Undefined scores share the worst rank.
std::vector<double> ranks(const std::vector<std::optional<double>>& values, bool higher_better) {
    const std::size_t m = values.size();
    std::vector<std::size_t> defined;
    for (std::size_t i = 0; i < m; ++i)
        if (values[i]) defined.push_back(i);
    std::sort(defined.begin(), defined.end(), [&](std::size_t a, std::size_t b) {
        return higher_better ? *values[a] > *values[b] : *values[a] < *values[b];
    });
    std::vector<double> r(m, 0.0);
    std::size_t pos = 0;
    while (pos < defined.size()) {
        std::size_t end = pos;
        while (end + 1 < defined.size() && *values[defined[end + 1]] == *values[defined[pos]]) ++end;
        const double avg = (static_cast<double>(pos + 1) + static_cast<double>(end + 1)) / 2.0;
        for (std::size_t t = pos; t <= end; ++t) r[defined[t]] = avg;
        pos = end + 1;
    }
    const std::size_t undefined = m - defined.size();
    if (undefined > 0) {
        const double avg = (static_cast<double>(defined.size() + 1) + static_cast<double>(m)) / 2.0;
        for (std::size_t i = 0; i < m; ++i)
            if (!values[i]) r[i] = avg;
    }
    return r;
}

}  // namespace

SelectionReport select_k(const DissimilarityMatrix& d, int k_min, int k_max) {
    const int n = static_cast<int>(d.size());
    if (k_min > k_max) throw ValidationError("empty k range");
    if (k_min < 2 || k_max > n - 1)
        throw ValidationError("k range must lie within [2, " + std::to_string(n - 1) + "]");
    SelectionReport report;
    report.dendrogram = ward_hierarchy(d);
    const int nk = k_max - k_min + 1;
    report.entries.resize(static_cast<std::size_t>(2 * nk));
    for (int t = 0; t < nk; ++t) {
        const int k = k_min + t;
        auto hier = cut_tree(report.dendrogram, k);
        hier.medoids = medoids_of(d, hier.labels, k);
        auto pam = pam_refine(d, hier.medoids).partition;
        hier.quality = score_partition(d, hier.labels);
        pam.quality = score_partition(d, pam.labels);
        report.entries[2 * t] = {k, ClusterMethod::hierarchical, std::move(hier), 0};
        report.entries[2 * t + 1] = {k, ClusterMethod::pam, std::move(pam), 0};
    }
    std::vector<std::optional<double>> pbc, hc, asw;
    for (const auto& e : report.entries) {
        pbc.push_back(e.partition.quality.pbc);
        hc.push_back(e.partition.quality.hc);
        asw.push_back(e.partition.quality.asw);
    }
    const auto rp = ranks(pbc, true), rh = ranks(hc, false), ra = ranks(asw, true);
    for (std::size_t i = 0; i < report.entries.size(); ++i) {
        report.entries[i].rank_sum = rp[i] + rh[i] + ra[i];
        if (report.entries[i].rank_sum < report.entries[report.chosen].rank_sum) report.chosen = i;
    }
    return report;
}

nlohmann::json to_json(const Dendrogram& dend) {
    nlohmann::json merges = nlohmann::json::array();
    for (const auto& m : dend.merges)
        merges.push_back({{"left", m.left}, {"right", m.right}, {"height", m.height}, {"size", m.size}});
    return {{"n", dend.n}, {"linkage", "ward.D2"}, {"merges", merges}, {"leaf_order", dend.leaf_order}};
}

namespace {
nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }
}  // namespace

nlohmann::json to_json(const SelectionReport& report, const std::vector<std::string>& subject_ids) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : report.entries) {
        std::vector<std::string> medoid_ids;
        for (auto m : e.partition.medoids) medoid_ids.push_back(subject_ids.at(m));
        entries.push_back({{"k", e.k},
                           {"method", to_string(e.method)},
                           {"pbc", opt(e.partition.quality.pbc)},
                           {"hc", opt(e.partition.quality.hc)},
                           {"asw", opt(e.partition.quality.asw)},
                           {"medoid_ids", medoid_ids},
                           {"rank_sum", e.rank_sum}});
    }
    return {{"entries", entries},
            {"chosen", {{"k", report.best().k}, {"method", to_string(report.best().method)}}}};
}

}  // namespace ssa

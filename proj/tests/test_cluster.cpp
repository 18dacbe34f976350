#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "oracles.hpp"
#include "ssa/cluster.hpp"
#include "ssa/error.hpp"
#include "ssa/synthcohort.hpp"

using namespace ssa;

namespace {

Labels random_labels(std::mt19937_64& rng, std::size_t n, int k) {
    Labels l(n);
    for (std::size_t i = 0; i < n; ++i) l[i] = static_cast<int>(i % static_cast<std::size_t>(k));
    std::shuffle(l.begin(), l.end(), rng);
    return l;
}

DissimilarityMatrix permuted(const DissimilarityMatrix& d, const std::vector<std::size_t>& perm) {
    oracle::Dense m(d.size(), std::vector<double>(d.size()));
    for (std::size_t i = 0; i < d.size(); ++i)
        for (std::size_t j = 0; j < d.size(); ++j) m[i][j] = d(perm[i], perm[j]);
    return oracle::from_dense(m);
}

}  // namespace

TEST_CASE("ward on two points") {
    DissimilarityMatrix d(2, {3.5}, {"a", "b"});
    auto t = ward_hierarchy(d);
    REQUIRE(t.merges.size() == 1);
    CHECK(t.merges[0].left == 0);
    CHECK(t.merges[0].right == 1);
    CHECK(t.merges[0].height == doctest::Approx(3.5).epsilon(1e-12));
    CHECK(t.merges[0].size == 2);
}

TEST_CASE("ward on three equidistant points merges (0,1) first") {
    DissimilarityMatrix d(3, {1.0, 1.0, 1.0}, {"a", "b", "c"});
    auto t = ward_hierarchy(d);
    REQUIRE(t.merges.size() == 2);
    CHECK(t.merges[0].left == 0);
    CHECK(t.merges[0].right == 1);
    CHECK(t.merges[0].height == doctest::Approx(1.0));
    CHECK(t.merges[1].left == 2);
    CHECK(t.merges[1].right == 3);
    // Lance-Williams: (2*1 + 2*1 - 1) / 3 = 1 on squared distances.
    CHECK(t.merges[1].height == doctest::Approx(1.0));
}

TEST_CASE("ward heights are non-decreasing and the tree is complete") {
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 20; ++rep) {
        auto d = oracle::random_matrix(rng, 5 + rep);
        auto t = ward_hierarchy(d);
        REQUIRE(t.merges.size() == d.size() - 1);
        for (std::size_t s = 1; s < t.merges.size(); ++s) CHECK(t.merges[s].height >= t.merges[s - 1].height - 1e-12);
        CHECK(t.merges.back().size == d.size());
        std::vector<std::size_t> order = t.leaf_order;
        std::sort(order.begin(), order.end());
        std::vector<std::size_t> expect(d.size());
        std::iota(expect.begin(), expect.end(), std::size_t{0});
        CHECK(order == expect);
    }
}

TEST_CASE("ward recovers two blobs") {
    std::mt19937_64 rng(5);
    auto [d, truth] = oracle::blobs(rng, {15, 15});
    auto p = cut_tree(ward_hierarchy(d), 2);
    CHECK(adjusted_rand_index(p.labels, truth) == 1.0);
}

TEST_CASE("cut_tree") {
    std::mt19937_64 rng(6);
    auto d = oracle::random_matrix(rng, 12);
    auto t = ward_hierarchy(d);
    SUBCASE("k = 1") {
        auto p = cut_tree(t, 1);
        CHECK(std::all_of(p.labels.begin(), p.labels.end(), [](int g) { return g == 0; }));
    }
    SUBCASE("k = n") {
        auto p = cut_tree(t, 12);
        CHECK(std::set<int>(p.labels.begin(), p.labels.end()).size() == 12);
    }
    SUBCASE("cuts are nested") {
        for (int k = 1; k < 12; ++k) {
            auto coarse = cut_tree(t, k), fine = cut_tree(t, k + 1);
            std::set<int> gs(fine.labels.begin(), fine.labels.end());
            CHECK(gs.size() == static_cast<std::size_t>(k + 1));
            for (std::size_t i = 0; i < 12; ++i)
                for (std::size_t j = 0; j < 12; ++j)
                    if (fine.labels[i] == fine.labels[j]) CHECK(coarse.labels[i] == coarse.labels[j]);
        }
    }
    SUBCASE("labels are canonical") {
        auto p = cut_tree(t, 4);
        CHECK(canonical_labels(p.labels) == p.labels);
    }
    SUBCASE("bad k") {
        CHECK_THROWS_AS(cut_tree(t, 0), ValidationError);
        CHECK_THROWS_AS(cut_tree(t, 13), ValidationError);
    }
}

TEST_CASE("canonical labels") {
    CHECK(canonical_labels({5, 5, 2, 9, 9, 9}) == Labels{1, 1, 2, 0, 0, 0});
    CHECK(canonical_labels({1, 0, 1, 0}) == Labels{0, 1, 0, 1});
}

TEST_CASE("medoids") {
    // Points 0, 1, 2 on a line.
    DissimilarityMatrix d(3, {1.0, 2.0, 1.0}, {"a", "b", "c"});
    CHECK(medoids_of(d, {0, 0, 0}, 1) == std::vector<std::size_t>{1});
    CHECK(medoids_of(d, {0, 0, 1}, 2) == std::vector<std::size_t>{0, 2});
    // Ties go to the smaller index.
    DissimilarityMatrix e(2, {1.0}, {"a", "b"});
    CHECK(medoids_of(e, {0, 0}, 1) == std::vector<std::size_t>{0});
    CHECK(medoid_cost(d, {1}) == 2.0);
}

TEST_CASE("pam from an optimal start is a fixed point") {
    std::mt19937_64 rng(7);
    auto [d, truth] = oracle::blobs(rng, {6, 6});
    auto init = medoids_of(d, truth, 2);
    auto r = pam_refine(d, init);
    CHECK(r.swaps == 0);
    CHECK(r.cost_trace.size() == 1);
    CHECK(r.partition.labels == canonical_labels(truth));
}

TEST_CASE("pam from a bad start reaches the exhaustive optimum") {
    std::mt19937_64 rng(8);
    for (int rep = 0; rep < 10; ++rep) {
        auto [d, truth] = oracle::blobs(rng, {5, 7});
        // Both medoids inside the first blob.
        auto r = pam_refine(d, {0, 1});
        CHECK(r.swaps >= 1);
        CHECK(r.cost_trace.back() == doctest::Approx(oracle::exhaustive_two_medoid_cost(oracle::to_dense(d))));
        CHECK(adjusted_rand_index(r.partition.labels, truth) == 1.0);
        for (std::size_t s = 1; s < r.cost_trace.size(); ++s) CHECK(r.cost_trace[s] < r.cost_trace[s - 1]);
    }
}

TEST_CASE("pam cost never increases on random instances") {
    std::mt19937_64 rng(9);
    for (int rep = 0; rep < 30; ++rep) {
        auto d = oracle::random_matrix(rng, 8 + rep % 10);
        auto r = pam_refine(d, {0, 1, 2});
        for (std::size_t s = 1; s < r.cost_trace.size(); ++s) CHECK(r.cost_trace[s] < r.cost_trace[s - 1]);
        CHECK(r.cost_trace.back() == doctest::Approx(medoid_cost(d, r.partition.medoids)));
        for (std::size_t g = 0; g < r.partition.medoids.size(); ++g)
            CHECK(r.partition.labels[r.partition.medoids[g]] == static_cast<int>(g));
    }
}

TEST_CASE("pam rejects invalid medoids") {
    DissimilarityMatrix d(3, {1.0, 2.0, 1.0}, {"a", "b", "c"});
    CHECK_THROWS_AS(pam_refine(d, {1, 1}), ValidationError);
    CHECK_THROWS_AS(pam_refine(d, {0, 3}), ValidationError);
    CHECK_THROWS_AS(pam_refine(d, {}), ValidationError);
}

TEST_CASE("quality indices match the brute-force references") {
    std::mt19937_64 rng(10);
    std::uniform_int_distribution<int> nd(6, 40), kd(2, 5);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = nd(rng);
        auto d = oracle::random_matrix(rng, n);
        auto l = random_labels(rng, n, kd(rng));
        auto dense = oracle::to_dense(d);
        REQUIRE(point_biserial(d, l).has_value());
        CHECK(*point_biserial(d, l) == doctest::Approx(oracle::pbc(dense, l)).epsilon(1e-10));
        CHECK(*hubert_c(d, l) == doctest::Approx(oracle::hubert_c(dense, l)).epsilon(1e-10));
        CHECK(silhouette(d, l).asw == doctest::Approx(oracle::asw(dense, l)).epsilon(1e-10));
    }
}

TEST_CASE("blob partitions score well and random labels score near zero") {
    std::mt19937_64 rng(11);
    auto [d, truth] = oracle::blobs(rng, {20, 20, 20});
    auto q = score_partition(d, truth);
    CHECK(*q.pbc >= 0.9);
    CHECK(*q.hc <= 0.05);
    CHECK(*q.asw >= 0.7);

    auto r = oracle::random_matrix(rng, 200);
    auto l = random_labels(rng, 200, 3);
    CHECK(std::fabs(*point_biserial(r, l)) < 0.1);
    CHECK(std::fabs(silhouette(r, l).asw) < 0.1);
}

TEST_CASE("pbc reaches the point-biserial maximum when within pairs are all closer") {
    // Within distance 1, between distance 3: the indicator and distances are
    // perfectly linearly related.
    oracle::Dense m(6, std::vector<double>(6, 0.0));
    Labels l = {0, 0, 0, 1, 1, 1};
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j)
            if (i != j) m[i][j] = l[i] == l[j] ? 1.0 : 3.0;
    CHECK(*point_biserial(oracle::from_dense(m), l) == doctest::Approx(1.0).epsilon(1e-12));
    // Within pairs at two distances below every between pair.
    m[0][1] = m[1][0] = 0.5;
    auto d = oracle::from_dense(m);
    CHECK(*point_biserial(d, l) == doctest::Approx(oracle::pbc(m, l)).epsilon(1e-12));
}

TEST_CASE("hubert c boundaries") {
    std::mt19937_64 rng(12);
    auto [d, truth] = oracle::blobs(rng, {4, 4}, 1.0, 10.0);
    // Within pairs are exactly the smallest distances.
    CHECK(*hubert_c(d, truth) == 0.0);
    // The two within pairs (0,3) and (1,2) are the two largest distances.
    oracle::Dense m = {{0, 1, 100, 101}, {1, 0, 100.5, 100}, {100, 100.5, 0, 1}, {101, 100, 1, 0}};
    CHECK(*hubert_c(oracle::from_dense(m), {0, 1, 1, 0}) == 1.0);
    // All distances equal.
    DissimilarityMatrix flat(4, std::vector<double>(6, 2.0), {"a", "b", "c", "d"});
    CHECK(*hubert_c(flat, {0, 0, 1, 1}) == 0.0);
    CHECK_FALSE(point_biserial(flat, {0, 0, 1, 1}).has_value());
}

TEST_CASE("silhouette special cases") {
    oracle::Dense m(4, std::vector<double>(4, 0.0));
    m[0][2] = m[2][0] = m[0][3] = m[3][0] = m[1][2] = m[2][1] = m[1][3] = m[3][1] = 5.0;
    CHECK(silhouette(oracle::from_dense(m), {0, 0, 1, 1}).asw == 1.0);

    DissimilarityMatrix d(3, {1.0, 4.0, 4.0}, {"a", "b", "c"});
    auto s = silhouette(d, {0, 0, 1});
    CHECK(s.widths[2] == 0.0);
    CHECK(s.widths[0] == doctest::Approx(0.75));
}

TEST_CASE("indices are invariant under relabeling, reordering and scaling") {
    std::mt19937_64 rng(13);
    for (int rep = 0; rep < 10; ++rep) {
        const std::size_t n = 25;
        auto d = oracle::random_matrix(rng, n);
        auto l = random_labels(rng, n, 3);
        auto base = score_partition(d, l);

        Labels relabeled = l;
        for (auto& g : relabeled) g = (g + 1) % 3;
        auto q1 = score_partition(d, relabeled);
        CHECK(*q1.pbc == doctest::Approx(*base.pbc).epsilon(1e-12));
        CHECK(*q1.hc == doctest::Approx(*base.hc).epsilon(1e-12));
        CHECK(*q1.asw == doctest::Approx(*base.asw).epsilon(1e-12));

        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        Labels pl(n);
        for (std::size_t i = 0; i < n; ++i) pl[i] = l[perm[i]];
        auto q2 = score_partition(permuted(d, perm), pl);
        CHECK(*q2.pbc == doctest::Approx(*base.pbc).epsilon(1e-10));
        CHECK(*q2.hc == doctest::Approx(*base.hc).epsilon(1e-10));
        CHECK(*q2.asw == doctest::Approx(*base.asw).epsilon(1e-10));

        auto q3 = score_partition(d.scaled(3.0), l);
        CHECK(*q3.pbc == doctest::Approx(*base.pbc).epsilon(1e-10));
        CHECK(*q3.hc == doctest::Approx(*base.hc).epsilon(1e-10));
        CHECK(*q3.asw == doctest::Approx(*base.asw).epsilon(1e-10));
    }
}

TEST_CASE("select_k picks the planted number of blobs") {
    std::mt19937_64 rng(14);
    auto [d, truth] = oracle::blobs(rng, {12, 15, 10});
    auto report = select_k(d, 2, 6);
    REQUIRE(report.entries.size() == 10);
    for (int k = 2; k <= 6; ++k) {
        const auto& h = report.find(k, ClusterMethod::hierarchical);
        const auto& p = report.find(k, ClusterMethod::pam);
        CHECK(h.partition.k == k);
        CHECK(p.partition.k == k);
        CHECK(h.partition.quality.pbc.has_value());
        CHECK(h.partition.quality.hc.has_value());
        CHECK(h.partition.quality.asw.has_value());
        CHECK(p.partition.medoids.size() == static_cast<std::size_t>(k));
    }
    CHECK(report.best().k == 3);
    CHECK(adjusted_rand_index(report.best().partition.labels, truth) == 1.0);

    auto j = to_json(report, d.subject_ids());
    CHECK(j.at("entries").size() == 10);
    CHECK(j.at("chosen").at("k") == 3);
    CHECK(to_json(report.dendrogram).at("merges").size() == d.size() - 1);
}

TEST_CASE("select_k validates its range") {
    std::mt19937_64 rng(15);
    auto d = oracle::random_matrix(rng, 6);
    CHECK_THROWS_AS(select_k(d, 3, 2), ValidationError);
    CHECK_THROWS_AS(select_k(d, 1, 3), ValidationError);
    CHECK_THROWS_AS(select_k(d, 2, 6), ValidationError);
}

#include "ssa/dissim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>

#include <omp.h>

#include "ssa/csv.hpp"
#include "ssa/error.hpp"

namespace ssa {

static_assert(std::endian::native == std::endian::little, "binary matrix I/O assumes little-endian host");

void CostModel::validate() const {
    std::vector<std::string> v;
    if (!std::isfinite(indel) || indel < 0) v.push_back("indel cost must be finite and non-negative");
    if (sub.size() != alphabet_size * alphabet_size) v.push_back("substitution matrix has wrong shape");
    if (v.empty()) {
        for (std::size_t i = 0; i < alphabet_size; ++i) {
            if (substitution(i, i) != 0.0) v.push_back("substitution diagonal must be zero");
            for (std::size_t j = 0; j < alphabet_size; ++j) {
                const double c = substitution(i, j);
                if (!std::isfinite(c) || c < 0) v.push_back("substitution costs must be finite and non-negative");
                if (c != substitution(j, i)) v.push_back("substitution matrix must be symmetric");
            }
        }
    }
    if (!v.empty()) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        throw ValidationError(std::move(v));
    }
}

CostModel CostModel::scaled(double factor) const {
    CostModel c = *this;
    c.indel *= factor;
    for (auto& x : c.sub) x *= factor;
    return c;
}

CostModel trate_costs(const TransitionMatrix& p, double cval, double indel) {
    if (!(cval > 0) || !std::isfinite(cval)) throw ValidationError("cval must be positive");
    const std::size_t a = p.size();
    CostModel c;
    c.indel = indel;
    c.alphabet_size = a;
    c.sub.assign(a * a, 0.0);
    for (std::size_t i = 0; i < a; ++i) {
        for (std::size_t j = i + 1; j < a; ++j) {
            double v = cval;
            if (p.visited[i] && p.visited[j]) v = std::max(0.0, cval - (p.rate(i, j) + p.rate(j, i)));
            c.sub[i * a + j] = c.sub[j * a + i] = v;
        }
    }
    c.validate();
    return c;
}

CostModel constant_costs(std::size_t alphabet_size, double indel, double sub) {
    CostModel c;
    c.indel = indel;
    c.alphabet_size = alphabet_size;
    c.sub.assign(alphabet_size * alphabet_size, sub);
    for (std::size_t i = 0; i < alphabet_size; ++i) c.sub[i * alphabet_size + i] = 0.0;
    c.validate();
    return c;
}

nlohmann::json to_json(const CostModel& c) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < c.alphabet_size; ++i)
        rows.push_back(std::vector<double>(c.sub.begin() + i * c.alphabet_size,
                                           c.sub.begin() + (i + 1) * c.alphabet_size));
    return {{"indel", c.indel}, {"sub", rows}};
}

CostModel cost_model_from_json(const nlohmann::json& j) {
    CostModel c;
    c.indel = j.at("indel").get<double>();
    const auto& rows = j.at("sub");
    c.alphabet_size = rows.size();
    for (const auto& r : rows) {
        if (r.size() != c.alphabet_size) throw ValidationError("cost json: substitution matrix not square");
        for (double v : r) c.sub.push_back(v);
    }
    c.validate();
    return c;
}

namespace {

// Core recurrence with caller-owned row buffers of size |b| + 1.
double om_kernel(std::span<const State> a, std::span<const State> b, const CostModel& cost,
                 std::vector<double>& prev, std::vector<double>& curr) {
    const std::size_t m = b.size();
    const double indel = cost.indel;
    prev.resize(m + 1);
    curr.resize(m + 1);
    for (std::size_t j = 0; j <= m; ++j) prev[j] = static_cast<double>(j) * indel;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        const double* subrow = cost.sub.data() + a[i - 1] * cost.alphabet_size;
        curr[0] = static_cast<double>(i) * indel;
        for (std::size_t j = 1; j <= m; ++j) {
            const double diag = prev[j - 1] + subrow[b[j - 1]];
            const double up = prev[j] + indel;
            const double left = curr[j - 1] + indel;
            curr[j] = std::min(diag, std::min(up, left));
        }
        std::swap(prev, curr);
    }
    return prev[m];
}

void check_states(std::span<const State> s, const CostModel& cost) {
    for (State x : s)
        if (x >= cost.alphabet_size) throw ValidationError("state index outside cost model alphabet");
}

void check_compatible(const SequenceSet& set, const CostModel& cost) {
    if (set.alphabet()->size() != cost.alphabet_size)
        throw ValidationError("cost model alphabet size " + std::to_string(cost.alphabet_size) +
                              " does not match sequence alphabet size " +
                              std::to_string(set.alphabet()->size()));
}

std::vector<std::string> subject_ids(const SequenceSet& set) {
    std::vector<std::string> ids;
    ids.reserve(set.size());
    for (const auto& s : set.sequences()) ids.push_back(s.subject_id);
    return ids;
}

}  // namespace

double om_distance(std::span<const State> a, std::span<const State> b, const CostModel& cost) {
    check_states(a, cost);
    check_states(b, cost);
    std::vector<double> prev, curr;
    return om_kernel(a, b, cost, prev, curr);
}

double om_distance(const StateSequence& a, const StateSequence& b, const CostModel& cost) {
    if (!same_alphabet(a.alphabet, b.alphabet))
        throw ValidationError("om_distance: sequences " + a.subject_id + " and " + b.subject_id +
                              " use different alphabets");
    if (a.alphabet && a.alphabet->size() != cost.alphabet_size)
        throw ValidationError("om_distance: cost model does not match the alphabet");
    return om_distance(std::span<const State>(a.states), std::span<const State>(b.states), cost);
}

DissimilarityMatrix::DissimilarityMatrix(std::size_t n, std::vector<double> condensed,
                                         std::vector<std::string> ids)
    : n_(n), condensed_(std::move(condensed)), ids_(std::move(ids)) {
    if (condensed_.size() != n * (n ? n - 1 : 0) / 2)
        throw ValidationError("condensed matrix length does not match n");
    if (ids_.size() != n) throw ValidationError("subject id count does not match n");
    for (double v : condensed_)
        if (!(v >= 0) || !std::isfinite(v)) throw ValidationError("dissimilarities must be finite and non-negative");
}

DissimilarityMatrix DissimilarityMatrix::scaled(double factor) const {
    auto c = condensed_;
    for (auto& v : c) v *= factor;
    return DissimilarityMatrix(n_, std::move(c), ids_);
}

DissimilarityMatrix distance_matrix_serial(const SequenceSet& set, const CostModel& cost) {
    check_compatible(set, cost);
    const std::size_t n = set.size();
    std::vector<double> out(n * (n ? n - 1 : 0) / 2);
    std::vector<double> prev, curr;
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            out[k++] = om_kernel(set[i].states, set[j].states, cost, prev, curr);
    return DissimilarityMatrix(n, std::move(out), subject_ids(set));
}

DissimilarityMatrix distance_matrix(const SequenceSet& set, const CostModel& cost, int threads) {
    check_compatible(set, cost);
    const std::size_t n = set.size();
    std::vector<double> out(n * (n ? n - 1 : 0) / 2);
    const long rows = static_cast<long>(n);
    const int nthreads = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel num_threads(nthreads)
    {
        std::vector<double> prev, curr;
#pragma omp for schedule(dynamic, 4)
        for (long ii = 0; ii < rows; ++ii) {
            const auto i = static_cast<std::size_t>(ii);
            std::size_t k = i * n - i * (i + 1) / 2;
            const auto& a = set[i].states;
            for (std::size_t j = i + 1; j < n; ++j)
                out[k++] = om_kernel(a, set[j].states, cost, prev, curr);
        }
    }
    return DissimilarityMatrix(n, std::move(out), subject_ids(set));
}

namespace {

constexpr char kMagic[8] = {'S', 'S', 'A', 'D', 'I', 'S', 'T', '1'};

template <class T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in) {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw ValidationError("distance file truncated");
    return v;
}

}  // namespace

void write_binary(std::ostream& out, const DissimilarityMatrix& d) {
    out.write(kMagic, sizeof kMagic);
    put<std::uint64_t>(out, d.size());
    out.write(reinterpret_cast<const char*>(d.condensed().data()),
              static_cast<std::streamsize>(d.condensed().size() * sizeof(double)));
    for (const auto& id : d.subject_ids()) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(id.size()));
        out.write(id.data(), static_cast<std::streamsize>(id.size()));
    }
}

void write_binary(const std::filesystem::path& path, const DissimilarityMatrix& d) {
    auto out = csv::open_out(path);
    write_binary(out, d);
    if (!out) throw IoError("write failed: " + path.string());
}

DissimilarityMatrix read_binary(std::istream& in) {
    char magic[8];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
        throw ValidationError("not an SSADIST1 distance file");
    const auto n = get<std::uint64_t>(in);
    if (n > (std::uint64_t{1} << 24)) throw ValidationError("distance file: implausible n");
    std::vector<double> condensed(n * (n ? n - 1 : 0) / 2);
    if (!in.read(reinterpret_cast<char*>(condensed.data()),
                 static_cast<std::streamsize>(condensed.size() * sizeof(double))))
        throw ValidationError("distance file truncated");
    std::vector<std::string> ids(n);
    for (auto& id : ids) {
        const auto len = get<std::uint32_t>(in);
        id.resize(len);
        if (len && !in.read(id.data(), len)) throw ValidationError("distance file truncated");
    }
    return DissimilarityMatrix(n, std::move(condensed), std::move(ids));
}

DissimilarityMatrix read_binary(const std::filesystem::path& path) {
    auto in = csv::open_in(path);
    return read_binary(in);
}

void write_dense_csv(std::ostream& out, const DissimilarityMatrix& d) {
    if (d.size() > kDenseCsvLimit)
        throw ValidationError("dense csv export is limited to n <= " + std::to_string(kDenseCsvLimit));
    std::ostringstream buf;
    buf.precision(17);
    buf << "subject_id";
    for (const auto& id : d.subject_ids()) buf << ',' << id;
    buf << '\n';
    for (std::size_t i = 0; i < d.size(); ++i) {
        buf << d.subject_ids()[i];
        for (std::size_t j = 0; j < d.size(); ++j) buf << ',' << d(i, j);
        buf << '\n';
    }
    out << buf.str();
}

}  // namespace ssa

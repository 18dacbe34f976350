#include "ssa/synthcohort.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <sstream>

#include "ssa/csv.hpp"
#include "ssa/error.hpp"

namespace ssa {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Xoshiro256::Xoshiro256(std::uint64_t seed) {
    for (auto& w : s_) w = splitmix64(seed);
}

Xoshiro256 Xoshiro256::for_stream(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t mix = stream + 0xD1B54A32D192ED03ULL;
    return Xoshiro256(seed ^ splitmix64(mix));
}

std::uint64_t Xoshiro256::next() {
    auto rotl = [](std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); };
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Xoshiro256::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Xoshiro256::uniform_open() { return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53; }

double Xoshiro256::normal() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Xoshiro256::exponential(double rate) { return -std::log(uniform_open()) / rate; }

std::size_t Xoshiro256::categorical(std::span<const double> weights) {
    double total = 0;
    for (double w : weights) total += w;
    double u = uniform() * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (u < weights[i]) return i;
        u -= weights[i];
    }
    // Rounding left u just above the last bucket.
    for (std::size_t i = weights.size(); i-- > 0;)
        if (weights[i] > 0) return i;
    return 0;
}

ArchetypeSpec persistent_archetype(std::string name, State home, std::size_t n_states, double stay,
                                   double return_prob, double hazard_multiplier) {
    ArchetypeSpec a;
    a.name = std::move(name);
    a.hazard_multiplier = hazard_multiplier;
    a.initial.assign(n_states, 0.1 / static_cast<double>(n_states - 1));
    a.initial[home] = 0.9;
    a.transition.assign(n_states * n_states, 0.0);
    const double spread_home = (1.0 - stay) / static_cast<double>(n_states - 1);
    const double spread_other = (1.0 - return_prob) / static_cast<double>(n_states);
    for (std::size_t i = 0; i < n_states; ++i) {
        for (std::size_t j = 0; j < n_states; ++j) {
            double& p = a.transition[i * n_states + j];
            if (i == home) p = j == home ? stay : spread_home;
            else p = spread_other + (j == home ? return_prob : 0.0);
        }
    }
    return a;
}

ArchetypeSpec sticky_archetype(std::string name, std::size_t n_states, double self_prob) {
    ArchetypeSpec a;
    a.name = std::move(name);
    a.initial.assign(n_states, 1.0 / static_cast<double>(n_states));
    a.transition.assign(n_states * n_states, (1.0 - self_prob) / static_cast<double>(n_states - 1));
    for (std::size_t i = 0; i < n_states; ++i) a.transition[i * n_states + i] = self_prob;
    return a;
}

void GeneratorConfig::validate() const {
    std::vector<std::string> v;
    const std::size_t states = std::size_t{1} << channels.size();
    auto check_dist = [&](std::span<const double> w, const std::string& what) {
        double total = 0;
        for (double x : w) {
            if (!(x >= 0) || !std::isfinite(x)) v.push_back(what + ": weights must be finite and non-negative");
            total += x;
        }
        if (std::fabs(total - 1.0) > 1e-9) v.push_back(what + ": weights must sum to 1");
    };
    if (n_patients < 1) v.push_back("n_patients must be at least 1");
    if (archetypes.empty()) v.push_back("at least one archetype is required");
    if (archetype_weights.size() != archetypes.size()) v.push_back("one weight per archetype required");
    else check_dist(archetype_weights, "archetype weights");
    for (const auto& a : archetypes) {
        if (a.initial.size() != states || a.transition.size() != states * states) {
            v.push_back("archetype " + a.name + ": distribution has wrong size");
            continue;
        }
        check_dist(a.initial, "archetype " + a.name + " initial");
        for (std::size_t i = 0; i < states; ++i)
            check_dist(std::span<const double>(a.transition).subspan(i * states, states),
                       "archetype " + a.name + " transition row " + std::to_string(i));
        if (!(a.hazard_multiplier > 0) || !std::isfinite(a.hazard_multiplier))
            v.push_back("archetype " + a.name + ": hazard multiplier must be finite and positive");
    }
    check_dist(mcs_band_weights, "mcs band");
    check_dist(procedure_band_weights, "procedure band");
    if (!(baseline_hazard_per_year > 0)) v.push_back("baseline hazard must be positive");
    if (!(censoring_horizon_years > 0)) v.push_back("censoring horizon must be positive");
    if (!(age_sd >= 0)) v.push_back("age sd must be non-negative");
    if (female_fraction < 0 || female_fraction > 1) v.push_back("female fraction must be in [0, 1]");
    if (observation_death_rate < 0 || observation_death_rate > 1)
        v.push_back("observation death rate must be in [0, 1]");
    if (weeks * 7 > observation_days) v.push_back("weeks * 7 must not exceed observation days");
    if (!v.empty()) throw ValidationError(std::move(v));
}

GeneratorConfig default_generator_config() {
    GeneratorConfig c;
    const std::size_t states = 8;
    // Combined-state codes: 0 None, 1 RAS, 3 RAS+BB.
    auto none = persistent_archetype("non_adopter", 0, states, 0.95, 0.6, 1.0);
    auto ras_bb = persistent_archetype("ras_bb", 3, states, 0.95, 0.6, 0.55);
    ras_bb.age_shift = -7.0;
    auto ras = persistent_archetype("ras_mono", 1, states, 0.95, 0.6, 0.7);
    c.archetypes = {none, ras_bb, ras};
    c.archetype_weights = {0.4, 0.3, 0.3};
    return c;
}

GeneratorConfig generator_config_from_json(const nlohmann::json& j, GeneratorConfig c) {
    c.n_patients = j.value("n_patients", c.n_patients);
    c.seed = j.value("seed", c.seed);
    c.baseline_hazard_per_year = j.value("baseline_hazard_per_year", c.baseline_hazard_per_year);
    c.censoring_horizon_years = j.value("censoring_horizon_years", c.censoring_horizon_years);
    c.age_mean = j.value("age_mean", c.age_mean);
    c.age_sd = j.value("age_sd", c.age_sd);
    c.female_fraction = j.value("female_fraction", c.female_fraction);
    c.mean_days_in_hospital = j.value("mean_days_in_hospital", c.mean_days_in_hospital);
    c.observation_death_rate = j.value("observation_death_rate", c.observation_death_rate);
    if (j.contains("mcs_band_weights")) c.mcs_band_weights = j.at("mcs_band_weights").get<std::array<double, 3>>();
    if (j.contains("procedure_band_weights"))
        c.procedure_band_weights = j.at("procedure_band_weights").get<std::array<double, 3>>();
    if (j.contains("archetypes")) {
        c.archetypes.clear();
        c.archetype_weights.clear();
        for (const auto& a : j.at("archetypes")) {
            ArchetypeSpec s;
            s.name = a.at("name");
            s.initial = a.at("initial").get<std::vector<double>>();
            for (const auto& row : a.at("transition"))
                for (double p : row) s.transition.push_back(p);
            s.hazard_multiplier = a.value("hazard_multiplier", 1.0);
            s.age_shift = a.value("age_shift", 0.0);
            c.archetypes.push_back(std::move(s));
            c.archetype_weights.push_back(a.at("weight").get<double>());
        }
    }
    return c;
}

namespace {

std::string subject_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "P%06zu", i + 1);
    return buf;
}

struct PatientDraw {
    PatientRecord patient;
    std::vector<PurchaseEvent> events;
    std::size_t archetype = 0;
    StateSequence combined;
};

// 2006-01-01 .. 2011-12-31.
const Date kIndexStart{std::chrono::year{2006} / 1 / 1};
constexpr int kIndexSpanDays = 2191;

PatientDraw draw_patient(const GeneratorConfig& c, std::size_t i, const AlphabetPtr& extended) {
    auto rng = Xoshiro256::for_stream(c.seed, i);
    const std::size_t states = extended->size();
    PatientDraw d;
    d.archetype = rng.categorical(c.archetype_weights);
    const auto& arch = c.archetypes[d.archetype];

    auto& p = d.patient;
    p.subject_id = subject_name(i);
    p.index_date = kIndexStart + std::chrono::days(static_cast<int>(rng.uniform() * kIndexSpanDays));
    p.sex = rng.uniform() < c.female_fraction ? Sex::female : Sex::male;
    p.age = std::clamp(static_cast<int>(std::lround(c.age_mean + arch.age_shift + c.age_sd * rng.normal())), 18, 105);
    const auto band = rng.categorical(c.mcs_band_weights);
    const int lo[] = {0, 5, 10}, width[] = {5, 5, 6};
    p.mcs_score = lo[band] + static_cast<int>(rng.uniform() * width[band]);
    p.mcs_band = mcs_band_of(p.mcs_score);
    const auto proc = rng.categorical(c.procedure_band_weights);
    p.n_procedures = proc < 2 ? static_cast<int>(proc) : 2 + static_cast<int>(rng.uniform() * 2);
    p.days_in_hospital = 1 + static_cast<int>(rng.exponential(1.0 / c.mean_days_in_hospital));
    p.incident = true;

    // Weekly combined states from the archetype chain.
    d.combined.subject_id = p.subject_id;
    d.combined.alphabet = extended;
    d.combined.states.resize(static_cast<std::size_t>(c.weeks));
    State s = static_cast<State>(rng.categorical(arch.initial));
    for (int w = 0; w < c.weeks; ++w) {
        if (w > 0)
            s = static_cast<State>(rng.categorical(std::span<const double>(arch.transition).subspan(s * states, states)));
        d.combined.states[w] = s;
    }

    // One purchase per maximal run of Drug weeks in each channel.
    for (std::size_t ch = 0; ch < c.channels.size(); ++ch) {
        int w = 0;
        while (w < c.weeks) {
            if (!((d.combined.states[w] >> ch) & 1u)) {
                ++w;
                continue;
            }
            int end = w;
            while (end < c.weeks && ((d.combined.states[end] >> ch) & 1u)) ++end;
            d.events.push_back({p.subject_id, ch, p.index_date + std::chrono::days(7 * w + 1), 7 * (end - w)});
            w = end;
        }
    }

    const double horizon = c.censoring_horizon_years * 365.0;
    if (rng.uniform() < c.observation_death_rate) {
        p.end_event = EndEvent::death;
        p.end_date = p.index_date + std::chrono::days(1 + static_cast<int>(rng.uniform() * c.observation_days));
    } else {
        const double rate = c.baseline_hazard_per_year * arch.hazard_multiplier / 365.0;
        const double t = rng.exponential(rate);
        if (t < horizon) {
            p.end_event = EndEvent::death;
            p.end_date = p.index_date + std::chrono::days(c.observation_days + 1 + static_cast<int>(t));
        } else {
            p.end_event = EndEvent::censored;
            p.end_date = p.index_date + std::chrono::days(c.observation_days + static_cast<int>(horizon));
        }
    }
    return d;
}

}  // namespace

SyntheticCohort generate(const GeneratorConfig& config) {
    config.validate();
    auto extended = Alphabet::extended(config.channels);
    std::vector<PatientDraw> draws(config.n_patients);
    const long n = static_cast<long>(config.n_patients);
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) draws[i] = draw_patient(config, static_cast<std::size_t>(i), extended);

    SyntheticCohort out;
    for (auto& d : draws) {
        out.truth.push_back({d.patient.subject_id, config.archetypes[d.archetype].name});
        out.events.insert(out.events.end(), d.events.begin(), d.events.end());
        out.patients.push_back(std::move(d.patient));
        out.simulated.push_back(std::move(d.combined));
    }
    return out;
}

void write_cohort(const std::filesystem::path& dir, const SyntheticCohort& cohort,
                  const GeneratorConfig& config) {
    std::filesystem::create_directories(dir);
    std::ostringstream p, e, t;
    write_patients_csv(p, cohort.patients);
    write_events_csv(e, cohort.events, config.channels);
    t << "subject_id,archetype\n";
    for (const auto& r : cohort.truth) t << r.subject_id << ',' << r.archetype << '\n';
    csv::write_file(dir / "patients.csv", p.str());
    csv::write_file(dir / "events.csv", e.str());
    csv::write_file(dir / "truth.csv", t.str());
}

std::vector<TruthRecord> read_truth_csv(const std::filesystem::path& path) {
    auto table = csv::read_file(path);
    if (table.header != std::vector<std::string>{"subject_id", "archetype"})
        throw ValidationError("truth csv: header must be subject_id,archetype");
    std::vector<TruthRecord> out;
    for (const auto& row : table.rows) {
        if (row.size() != 2) throw ValidationError("truth csv: expected 2 columns");
        out.push_back({row[0], row[1]});
    }
    return out;
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) throw ValidationError("adjusted_rand_index: labelings differ in length");
    const double n = static_cast<double>(a.size());
    if (a.size() < 2) return 1.0;
    std::map<std::pair<int, int>, double> cells;
    std::map<int, double> rows, cols;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cells[{a[i], b[i]}] += 1;
        rows[a[i]] += 1;
        cols[b[i]] += 1;
    }
    auto pairs = [](double x) { return x * (x - 1) / 2; };
    double index = 0, sa = 0, sb = 0;
    for (const auto& [_, c] : cells) index += pairs(c);
    for (const auto& [_, c] : rows) sa += pairs(c);
    for (const auto& [_, c] : cols) sb += pairs(c);
    const double expected = sa * sb / pairs(n);
    const double maximum = (sa + sb) / 2;
    if (maximum == expected) {
        // Degenerate marginals: only identical partitions agree.
        return (cells.size() == rows.size() && cells.size() == cols.size()) ? 1.0 : 0.0;
    }
    return (index - expected) / (maximum - expected);
}

}  // namespace ssa

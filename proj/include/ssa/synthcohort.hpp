#pragma once

// Seeded synthetic cohorts with planted behavioural archetypes.
//
// Random numbers come from xoshiro256** (Blackman & Vigna) whose 256-bit
// state is filled by splitmix64. Patient i draws from its own stream, seeded
// with splitmix64 applied to `seed ^ splitmix64(i + 0xD1B54A32D192ED03)`, so
// output is identical whatever the thread count. Variates are derived with
// fixed formulas (53-bit uniforms, Box-Muller normals, inversion for
// exponentials) instead of the implementation-defined std:: distributions.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ssa/ingest.hpp"

namespace ssa {

std::uint64_t splitmix64(std::uint64_t& state);

class Xoshiro256 {
public:
    explicit Xoshiro256(std::uint64_t seed);
    static Xoshiro256 for_stream(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next();
    double uniform();           // [0, 1)
    double uniform_open();      // (0, 1]
    double normal();            // standard normal
    double exponential(double rate);
    std::size_t categorical(std::span<const double> weights);

private:
    std::array<std::uint64_t, 4> s_{};
};

struct ArchetypeSpec {
    std::string name;
    std::vector<double> initial;     // over the combined alphabet
    std::vector<double> transition;  // row-major, rows stochastic
    double hazard_multiplier = 1.0;
    double age_shift = 0.0;          // added to the cohort mean age
};

// Chain that mostly stays in `home`: P(home -> home) = stay, every other
// state returns home with probability `return_prob` and otherwise moves
// uniformly.
ArchetypeSpec persistent_archetype(std::string name, State home, std::size_t n_states, double stay,
                                   double return_prob, double hazard_multiplier);

// Every state keeps itself with probability `self_prob`, other moves uniform,
// uniform start.
ArchetypeSpec sticky_archetype(std::string name, std::size_t n_states, double self_prob);

struct GeneratorConfig {
    std::size_t n_patients = 600;
    std::uint64_t seed = 42;
    std::vector<std::string> channels = kDefaultChannels;
    int observation_days = 365;
    int weeks = 52;
    std::vector<ArchetypeSpec> archetypes;
    std::vector<double> archetype_weights;
    double baseline_hazard_per_year = 0.15;
    double censoring_horizon_years = 5.0;
    double age_mean = 75.0;
    double age_sd = 11.0;
    double female_fraction = 0.5;
    std::array<double, 3> mcs_band_weights{0.42, 0.48, 0.10};
    std::array<double, 3> procedure_band_weights{0.88, 0.11, 0.01};
    double mean_days_in_hospital = 15.0;
    // Fraction of patients who die inside the observation window; they are
    // written out so the cohort filter has something to remove.
    double observation_death_rate = 0.0;

    void validate() const;
};

// Three archetypes: non-adopters, RAS+BB combination, RAS monotherapy.
GeneratorConfig default_generator_config();
GeneratorConfig generator_config_from_json(const nlohmann::json& j, GeneratorConfig base);

struct TruthRecord {
    std::string subject_id;
    std::string archetype;
};

struct SyntheticCohort {
    std::vector<PatientRecord> patients;
    std::vector<PurchaseEvent> events;
    std::vector<TruthRecord> truth;
    std::vector<StateSequence> simulated;  // combined weekly states as drawn
};

SyntheticCohort generate(const GeneratorConfig& config);

// Writes patients.csv, events.csv and truth.csv into `dir`.
void write_cohort(const std::filesystem::path& dir, const SyntheticCohort& cohort,
                  const GeneratorConfig& config);

std::vector<TruthRecord> read_truth_csv(const std::filesystem::path& path);

// Chance-corrected agreement of two labelings via their contingency table.
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

}  // namespace ssa

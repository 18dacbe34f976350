#pragma once

// Patient and purchase parsing, cohort selection, coverage timelines and
// weekly discretization into binary channel sequences.

#include <chrono>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ssa/seq_core.hpp"

namespace ssa {

using Date = std::chrono::sys_days;

// Strict ISO-8601 calendar date, YYYY-MM-DD.
std::optional<Date> parse_date(std::string_view text);
std::string format_date(Date d);

enum class Sex { male, female };
enum class McsBand { low, intermediate, high };
enum class EndEvent { death, censored };

// 0-4 low, 5-9 intermediate, >=10 high.
McsBand mcs_band_of(int score);
const char* to_string(McsBand band);

struct PatientRecord {
    std::string subject_id;
    Date index_date;
    Sex sex = Sex::male;
    int age = 0;
    int mcs_score = 0;
    McsBand mcs_band = McsBand::low;
    int n_procedures = 0;
    int days_in_hospital = 0;
    Date end_date;
    EndEvent end_event = EndEvent::censored;
    // Empty cell means the wash-out status is unknown; treated as incident.
    std::optional<bool> incident;
};

struct PurchaseEvent {
    std::string subject_id;
    std::size_t channel = 0;  // index into the configured channel list
    Date purchase_date;
    int coverage_days = 1;
};

enum class OverlapPolicy { carry_forward, truncate };

struct IngestConfig {
    std::vector<std::string> channels = kDefaultChannels;
    int observation_days = 365;
    int weeks = 52;
    int coverage_threshold = 4;  // covered days out of 7 required for Drug
    OverlapPolicy overlap = OverlapPolicy::carry_forward;
    bool apply_washout = true;

    void validate() const;
};

struct ParsedInputs {
    std::vector<PatientRecord> patients;
    std::vector<PurchaseEvent> events;
};

std::vector<PatientRecord> parse_patients(std::istream& in);
std::vector<PurchaseEvent> parse_events(std::istream& in, std::span<const std::string> channels);

// Parses both files and cross-checks subject ids. All problems are collected
// into one ValidationError with line/column context.
ParsedInputs parse_inputs(std::istream& patients, std::istream& events,
                          std::span<const std::string> channels);
ParsedInputs parse_inputs(const std::filesystem::path& patients_file,
                          const std::filesystem::path& events_file,
                          std::span<const std::string> channels);

struct Exclusion {
    std::string subject_id;
    std::string reason;  // death_in_observation | non_incident | no_purchase_censored
};

struct CohortSelection {
    std::vector<PatientRecord> retained;
    std::vector<Exclusion> exclusions;
};

CohortSelection apply_cohort_filters(const std::vector<PatientRecord>& patients,
                                     const std::vector<PurchaseEvent>& events,
                                     const IngestConfig& config);

// Inclusive day range, day 1 = first day after the index date.
struct DayInterval {
    int start = 0;
    int end = 0;
    int days() const noexcept { return end - start + 1; }
    friend bool operator==(const DayInterval&, const DayInterval&) = default;
};

struct CoverageTimeline {
    std::string subject_id;
    std::size_t channel = 0;
    std::vector<DayInterval> intervals;

    int covered_days() const noexcept;
};

// A purchase placed on the observation-day axis.
struct DayPurchase {
    int day = 1;
    int coverage_days = 1;
};

// Removes overlaps between purchases of one drug class and clips the result
// to [1, observation_days]. Sorting is done here: by day, then larger
// coverage first, then input order.
std::vector<DayInterval> resolve_overlaps(std::span<const DayPurchase> purchases,
                                          OverlapPolicy policy, int observation_days);

// Event-level wrapper. Purchases before the index date are dropped and
// reported through `warnings`; purchases after the window are ignored.
CoverageTimeline resolve_overlaps(const PatientRecord& patient, std::size_t channel,
                                  std::span<const PurchaseEvent> events, const IngestConfig& config,
                                  std::vector<std::string>* warnings = nullptr);

// Week w spans days 7(w-1)+1 .. 7w. Days past weeks*7 are ignored.
StateSequence build_channel_sequence(const CoverageTimeline& timeline, int weeks, int threshold);

struct ChannelSequences {
    std::vector<SequenceSet> channels;  // one set per configured channel
    SequenceSet combined;
};

// Full per-subject construction, ordered by subject_id. Runs subjects in
// parallel; the result does not depend on the schedule.
ChannelSequences build_sequences(const std::vector<PatientRecord>& patients,
                                 const std::vector<PurchaseEvent>& events, const IngestConfig& config,
                                 std::vector<std::string>* warnings = nullptr);

struct SurvivalRecord {
    std::string subject_id;
    double time = 0;  // days since the end of the observation window
    int event = 0;    // 1 death, 0 censored
};

// Follow-up starts the day after the observation window. Subjects with no
// follow-up time are skipped.
std::vector<SurvivalRecord> survival_records(const std::vector<PatientRecord>& patients,
                                             int observation_days);

void write_patients_csv(std::ostream& out, const std::vector<PatientRecord>& patients);
void write_events_csv(std::ostream& out, const std::vector<PurchaseEvent>& events,
                      std::span<const std::string> channels);
void write_exclusions_csv(std::ostream& out, const std::vector<Exclusion>& exclusions);
void write_survival_csv(std::ostream& out, const std::vector<SurvivalRecord>& records);
std::vector<SurvivalRecord> read_survival_csv(std::istream& in);

}  // namespace ssa

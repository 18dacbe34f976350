#include "ssa/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <unordered_map>

#include "ssa/csv.hpp"
#include "ssa/error.hpp"

namespace ssa {

namespace {

std::optional<int> parse_int(std::string_view s) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

// Maps required column names to positions; reports every missing column.
std::vector<std::size_t> locate_columns(const std::vector<std::string>& header,
                                        std::span<const std::string_view> required,
                                        const char* file, std::vector<std::string>& errors) {
    std::vector<std::size_t> pos;
    for (auto name : required) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            errors.push_back(std::string(file) + ": missing column " + std::string(name));
            pos.push_back(0);
        } else {
            pos.push_back(static_cast<std::size_t>(it - header.begin()));
        }
    }
    return pos;
}

std::string where(std::size_t line, std::string_view column) {
    return "line " + std::to_string(line) + ", column " + std::string(column);
}

int day_of(const PatientRecord& p, Date d) { return static_cast<int>((d - p.index_date).count()); }

}  // namespace

std::optional<Date> parse_date(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    auto y = parse_int(text.substr(0, 4));
    auto m = parse_int(text.substr(5, 2));
    auto d = parse_int(text.substr(8, 2));
    if (!y || !m || !d) return std::nullopt;
    std::chrono::year_month_day ymd{std::chrono::year{*y}, std::chrono::month{static_cast<unsigned>(*m)},
                                    std::chrono::day{static_cast<unsigned>(*d)}};
    if (!ymd.ok()) return std::nullopt;
    return Date{ymd};
}

std::string format_date(Date d) {
    std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

McsBand mcs_band_of(int score) {
    if (score <= 4) return McsBand::low;
    if (score <= 9) return McsBand::intermediate;
    return McsBand::high;
}

const char* to_string(McsBand band) {
    switch (band) {
        case McsBand::low: return "low";
        case McsBand::intermediate: return "intermediate";
        case McsBand::high: return "high";
    }
    return "?";
}

void IngestConfig::validate() const {
    std::vector<std::string> v;
    if (channels.empty()) v.push_back("at least one channel is required");
    std::set<std::string> uniq(channels.begin(), channels.end());
    if (uniq.size() != channels.size()) v.push_back("channel names must be unique");
    if (observation_days < 7) v.push_back("observation_days must be at least 7");
    if (weeks < 1) v.push_back("weeks must be positive");
    if (weeks * 7 > observation_days) v.push_back("weeks * 7 must not exceed observation_days");
    if (coverage_threshold < 1 || coverage_threshold > 7) v.push_back("coverage threshold must be in [1, 7]");
    if (!v.empty()) throw ValidationError(std::move(v));
}

std::vector<PatientRecord> parse_patients(std::istream& in) {
    static constexpr std::string_view cols[] = {"subject_id", "index_date", "sex", "age",
                                                "mcs_score", "n_procedures", "days_in_hospital",
                                                "end_date", "end_event"};
    auto table = csv::read(in);
    std::vector<std::string> errors;
    auto pos = locate_columns(table.header, cols, "patients", errors);
    if (!errors.empty()) throw ValidationError(std::move(errors));
    auto inc_it = std::find(table.header.begin(), table.header.end(), "incident_flag");
    std::optional<std::size_t> inc_col;
    if (inc_it != table.header.end()) inc_col = static_cast<std::size_t>(inc_it - table.header.begin());

    std::vector<PatientRecord> out;
    std::set<std::string> ids;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const auto line = table.line_numbers[r];
        if (row.size() != table.header.size()) {
            errors.push_back("patients line " + std::to_string(line) + ": expected " +
                             std::to_string(table.header.size()) + " columns, got " +
                             std::to_string(row.size()));
            continue;
        }
        const std::size_t before = errors.size();
        auto field = [&](std::size_t i) -> const std::string& { return row[pos[i]]; };
        auto bad = [&](std::size_t i, const std::string& what) {
            errors.push_back("patients " + where(line, cols[i]) + ": " + what);
        };
        PatientRecord p;
        p.subject_id = field(0);
        if (p.subject_id.empty()) bad(0, "empty subject_id");
        if (!ids.insert(p.subject_id).second) bad(0, "duplicate subject_id " + p.subject_id);
        auto idx = parse_date(field(1));
        if (!idx) bad(1, "malformed date '" + field(1) + "'");
        if (field(2) == "M") p.sex = Sex::male;
        else if (field(2) == "F") p.sex = Sex::female;
        else bad(2, "sex must be M or F");
        auto int_field = [&](std::size_t i, int& dst) {
            auto v = parse_int(field(i));
            if (!v || *v < 0) bad(i, "expected non-negative integer, got '" + field(i) + "'");
            else dst = *v;
        };
        int_field(3, p.age);
        int_field(4, p.mcs_score);
        int_field(5, p.n_procedures);
        int_field(6, p.days_in_hospital);
        auto end = parse_date(field(7));
        if (!end) bad(7, "malformed date '" + field(7) + "'");
        if (field(8) == "death") p.end_event = EndEvent::death;
        else if (field(8) == "censored") p.end_event = EndEvent::censored;
        else bad(8, "end_event must be death or censored");
        if (inc_col) {
            const auto& f = row[*inc_col];
            if (f == "1" || f == "true") p.incident = true;
            else if (f == "0" || f == "false") p.incident = false;
            else if (!f.empty())
                errors.push_back("patients " + where(line, "incident_flag") + ": expected 0/1");
        }
        if (idx && end && *end < *idx) bad(7, "end_date before index_date");
        if (errors.size() != before) continue;
        p.index_date = *idx;
        p.end_date = *end;
        p.mcs_band = mcs_band_of(p.mcs_score);
        out.push_back(std::move(p));
    }
    if (!errors.empty()) throw ValidationError(std::move(errors));
    return out;
}

std::vector<PurchaseEvent> parse_events(std::istream& in, std::span<const std::string> channels) {
    static constexpr std::string_view cols[] = {"subject_id", "drug_class", "purchase_date",
                                                "coverage_days"};
    auto table = csv::read(in);
    std::vector<std::string> errors;
    auto pos = locate_columns(table.header, cols, "events", errors);
    if (!errors.empty()) throw ValidationError(std::move(errors));
    std::vector<PurchaseEvent> out;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const auto line = table.line_numbers[r];
        if (row.size() != table.header.size()) {
            errors.push_back("events line " + std::to_string(line) + ": expected " +
                             std::to_string(table.header.size()) + " columns, got " +
                             std::to_string(row.size()));
            continue;
        }
        const std::size_t before = errors.size();
        PurchaseEvent e;
        e.subject_id = row[pos[0]];
        auto ch = std::find(channels.begin(), channels.end(), row[pos[1]]);
        if (ch == channels.end())
            errors.push_back("events line " + std::to_string(line) + ": unknown drug_class '" +
                             row[pos[1]] + "'");
        else
            e.channel = static_cast<std::size_t>(ch - channels.begin());
        auto date = parse_date(row[pos[2]]);
        if (!date) errors.push_back("events " + where(line, cols[2]) + ": malformed date '" + row[pos[2]] + "'");
        auto cov = parse_int(row[pos[3]]);
        if (!cov || *cov < 1)
            errors.push_back("events " + where(line, cols[3]) + ": coverage_days must be an integer >= 1");
        if (errors.size() != before) continue;
        e.purchase_date = *date;
        e.coverage_days = *cov;
        out.push_back(std::move(e));
    }
    if (!errors.empty()) throw ValidationError(std::move(errors));
    return out;
}

ParsedInputs parse_inputs(std::istream& patients, std::istream& events,
                          std::span<const std::string> channels) {
    ParsedInputs in;
    std::vector<std::string> errors;
    try {
        in.patients = parse_patients(patients);
    } catch (const ValidationError& e) {
        errors.insert(errors.end(), e.violations().begin(), e.violations().end());
    }
    try {
        in.events = parse_events(events, channels);
    } catch (const ValidationError& e) {
        errors.insert(errors.end(), e.violations().begin(), e.violations().end());
    }
    if (errors.empty()) {
        std::set<std::string> ids;
        for (const auto& p : in.patients) ids.insert(p.subject_id);
        std::set<std::string> orphans;
        for (const auto& e : in.events)
            if (!ids.count(e.subject_id)) orphans.insert(e.subject_id);
        if (!orphans.empty()) {
            std::string list;
            for (const auto& o : orphans) list += (list.empty() ? "" : ",") + o;
            errors.push_back("events reference unknown subject_id(s): " + list);
        }
    }
    if (!errors.empty()) throw ValidationError(std::move(errors));
    return in;
}

ParsedInputs parse_inputs(const std::filesystem::path& patients_file,
                          const std::filesystem::path& events_file,
                          std::span<const std::string> channels) {
    auto p = csv::open_in(patients_file);
    auto e = csv::open_in(events_file);
    return parse_inputs(p, e, channels);
}

CohortSelection apply_cohort_filters(const std::vector<PatientRecord>& patients,
                                     const std::vector<PurchaseEvent>& events,
                                     const IngestConfig& config) {
    std::unordered_map<std::string, const PatientRecord*> by_id;
    for (const auto& p : patients) by_id.emplace(p.subject_id, &p);
    std::set<std::string> purchased;
    for (const auto& e : events) {
        auto it = by_id.find(e.subject_id);
        if (it == by_id.end()) continue;
        const int day = day_of(*it->second, e.purchase_date);
        if (day >= 0 && day <= config.observation_days) purchased.insert(e.subject_id);
    }

    CohortSelection sel;
    for (const auto& p : patients) {
        const bool ends_in_window = day_of(p, p.end_date) <= config.observation_days;
        const char* reason = nullptr;
        if (p.end_event == EndEvent::death && ends_in_window)
            reason = "death_in_observation";
        else if (config.apply_washout && p.incident && !*p.incident)
            reason = "non_incident";
        else if (p.end_event == EndEvent::censored && ends_in_window && !purchased.count(p.subject_id))
            reason = "no_purchase_censored";
        if (reason)
            sel.exclusions.push_back({p.subject_id, reason});
        else
            sel.retained.push_back(p);
    }
    return sel;
}

int CoverageTimeline::covered_days() const noexcept {
    int total = 0;
    for (const auto& iv : intervals) total += iv.days();
    return total;
}

std::vector<DayInterval> resolve_overlaps(std::span<const DayPurchase> purchases,
                                          OverlapPolicy policy, int observation_days) {
    std::vector<std::size_t> order(purchases.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (purchases[a].day != purchases[b].day) return purchases[a].day < purchases[b].day;
        return purchases[a].coverage_days > purchases[b].coverage_days;
    });

    std::vector<DayInterval> out;
    long covered_until = 0;  // last covered day so far; may run past the window
    for (auto i : order) {
        const auto& p = purchases[i];
        long start = 0;
        long end = 0;
        if (policy == OverlapPolicy::carry_forward) {
            start = std::max<long>(p.day, covered_until + 1);
            end = start + p.coverage_days - 1;
        } else {
            start = std::max<long>(p.day, covered_until + 1);
            end = static_cast<long>(p.day) + p.coverage_days - 1;
            if (end < start) continue;
        }
        covered_until = std::max(covered_until, end);
        start = std::max<long>(start, 1);
        end = std::min<long>(end, observation_days);
        if (start > end) continue;
        out.push_back({static_cast<int>(start), static_cast<int>(end)});
    }
    return out;
}

CoverageTimeline resolve_overlaps(const PatientRecord& patient, std::size_t channel,
                                  std::span<const PurchaseEvent> events, const IngestConfig& config,
                                  std::vector<std::string>* warnings) {
    std::vector<DayPurchase> days;
    for (const auto& e : events) {
        if (e.channel != channel || e.subject_id != patient.subject_id) continue;
        int day = day_of(patient, e.purchase_date);
        if (day < 0) {
            if (warnings)
                warnings->push_back("dropped pre-index purchase of " + config.channels.at(channel) +
                                    " for " + patient.subject_id + " on " + format_date(e.purchase_date));
            continue;
        }
        if (day > config.observation_days) continue;
        // A purchase on the discharge day itself starts coverage on day 1.
        days.push_back({std::max(day, 1), e.coverage_days});
    }
    CoverageTimeline tl;
    tl.subject_id = patient.subject_id;
    tl.channel = channel;
    tl.intervals = resolve_overlaps(days, config.overlap, config.observation_days);
    return tl;
}

StateSequence build_channel_sequence(const CoverageTimeline& timeline, int weeks, int threshold) {
    const int span = weeks * 7;
    std::vector<unsigned char> covered(static_cast<std::size_t>(span) + 1, 0);
    for (const auto& iv : timeline.intervals)
        for (int d = std::max(iv.start, 1); d <= std::min(iv.end, span); ++d) covered[d] = 1;
    StateSequence s;
    s.subject_id = timeline.subject_id;
    s.alphabet = Alphabet::binary();
    s.states.resize(static_cast<std::size_t>(weeks));
    for (int w = 0; w < weeks; ++w) {
        int count = 0;
        for (int d = 7 * w + 1; d <= 7 * w + 7; ++d) count += covered[d];
        s.states[w] = count >= threshold ? kDrugState : kNoDrugState;
    }
    return s;
}

ChannelSequences build_sequences(const std::vector<PatientRecord>& patients,
                                 const std::vector<PurchaseEvent>& events, const IngestConfig& config,
                                 std::vector<std::string>* warnings) {
    config.validate();
    if (patients.empty()) throw ValidationError("no patients to build sequences for");
    std::vector<const PatientRecord*> order;
    for (const auto& p : patients) order.push_back(&p);
    std::sort(order.begin(), order.end(),
              [](auto* a, auto* b) { return a->subject_id < b->subject_id; });

    std::unordered_map<std::string, std::vector<PurchaseEvent>> by_subject;
    for (const auto& e : events) by_subject[e.subject_id].push_back(e);

    const std::size_t n = order.size();
    const std::size_t nc = config.channels.size();
    auto extended = Alphabet::extended(config.channels);
    std::vector<std::vector<StateSequence>> per_channel(nc, std::vector<StateSequence>(n));
    std::vector<StateSequence> combined(n);
    std::vector<std::vector<std::string>> notes(n);
    static const std::vector<PurchaseEvent> kNone;

#pragma omp parallel for schedule(dynamic, 16)
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = *order[i];
        auto it = by_subject.find(p.subject_id);
        const auto& evs = it == by_subject.end() ? kNone : it->second;
        std::vector<StateSequence> chans;
        for (std::size_t c = 0; c < nc; ++c) {
            auto tl = resolve_overlaps(p, c, evs, config, &notes[i]);
            chans.push_back(build_channel_sequence(tl, config.weeks, config.coverage_threshold));
            per_channel[c][i] = chans.back();
        }
        combined[i] = combine_channels(chans, extended);
    }

    if (warnings)
        for (auto& v : notes) warnings->insert(warnings->end(), v.begin(), v.end());
    ChannelSequences out;
    for (auto& ch : per_channel) out.channels.push_back(validate_set(std::move(ch)));
    out.combined = validate_set(std::move(combined));
    return out;
}

std::vector<SurvivalRecord> survival_records(const std::vector<PatientRecord>& patients,
                                             int observation_days) {
    std::vector<SurvivalRecord> out;
    for (const auto& p : patients) {
        const int t = day_of(p, p.end_date) - observation_days;
        if (t <= 0) continue;
        out.push_back({p.subject_id, static_cast<double>(t), p.end_event == EndEvent::death ? 1 : 0});
    }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.subject_id < b.subject_id; });
    return out;
}

void write_patients_csv(std::ostream& out, const std::vector<PatientRecord>& patients) {
    out << "subject_id,index_date,sex,age,mcs_score,n_procedures,days_in_hospital,end_date,end_event,"
           "incident_flag\n";
    for (const auto& p : patients) {
        out << p.subject_id << ',' << format_date(p.index_date) << ','
            << (p.sex == Sex::female ? 'F' : 'M') << ',' << p.age << ',' << p.mcs_score << ','
            << p.n_procedures << ',' << p.days_in_hospital << ',' << format_date(p.end_date) << ','
            << (p.end_event == EndEvent::death ? "death" : "censored") << ',';
        if (p.incident) out << (*p.incident ? '1' : '0');
        out << '\n';
    }
}

void write_events_csv(std::ostream& out, const std::vector<PurchaseEvent>& events,
                      std::span<const std::string> channels) {
    out << "subject_id,drug_class,purchase_date,coverage_days\n";
    for (const auto& e : events)
        out << e.subject_id << ',' << channels[e.channel] << ',' << format_date(e.purchase_date) << ','
            << e.coverage_days << '\n';
}

void write_exclusions_csv(std::ostream& out, const std::vector<Exclusion>& exclusions) {
    out << "subject_id,reason\n";
    for (const auto& e : exclusions) out << e.subject_id << ',' << e.reason << '\n';
}

void write_survival_csv(std::ostream& out, const std::vector<SurvivalRecord>& records) {
    out << "subject_id,time,event\n";
    for (const auto& r : records) out << r.subject_id << ',' << static_cast<long>(r.time) << ',' << r.event << '\n';
}

std::vector<SurvivalRecord> read_survival_csv(std::istream& in) {
    auto table = csv::read(in);
    if (table.header != std::vector<std::string>{"subject_id", "time", "event"})
        throw ValidationError("survival csv: header must be subject_id,time,event");
    std::vector<SurvivalRecord> out;
    std::vector<std::string> errors;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        auto line = std::to_string(table.line_numbers[r]);
        if (row.size() != 3) {
            errors.push_back("survival line " + line + ": expected 3 columns");
            continue;
        }
        auto t = parse_int(row[1]);
        auto e = parse_int(row[2]);
        if (!t || *t <= 0) errors.push_back("survival line " + line + ": time must be a positive integer");
        if (!e || (*e != 0 && *e != 1)) errors.push_back("survival line " + line + ": event must be 0 or 1");
        if (t && e && *t > 0 && (*e == 0 || *e == 1)) out.push_back({row[0], static_cast<double>(*t), *e});
    }
    if (!errors.empty()) throw ValidationError(std::move(errors));
    return out;
}

}  // namespace ssa

#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <sstream>

#include "ssa/error.hpp"
#include "ssa/ingest.hpp"

using namespace ssa;
using namespace std::chrono;

namespace {

const char* kPatientsHeader =
    "subject_id,index_date,sex,age,mcs_score,n_procedures,days_in_hospital,end_date,end_event\n";
const char* kEventsHeader = "subject_id,drug_class,purchase_date,coverage_days\n";

Date day0() { return sys_days{year{2010} / 1 / 1}; }

PatientRecord patient(const std::string& id, int end_day, EndEvent ev) {
    PatientRecord p;
    p.subject_id = id;
    p.index_date = day0();
    p.age = 70;
    p.end_date = day0() + days{end_day};
    p.end_event = ev;
    return p;
}

PurchaseEvent purchase(const std::string& id, std::size_t ch, int day, int cov) {
    return {id, ch, day0() + days{day}, cov};
}

std::vector<DayInterval> resolve(std::vector<DayPurchase> p, OverlapPolicy pol) {
    return resolve_overlaps(p, pol, 365);
}

CoverageTimeline timeline_of(std::vector<DayInterval> iv) { return {"x", 0, std::move(iv)}; }

bool contains(const ValidationError& e, const std::string& needle) {
    for (const auto& v : e.violations())
        if (v.find(needle) != std::string::npos) return true;
    return false;
}

}  // namespace

TEST_CASE("dates") {
    CHECK(parse_date("2010-02-28").has_value());
    CHECK_FALSE(parse_date("2010-02-30").has_value());
    CHECK_FALSE(parse_date("2010-2-3").has_value());
    CHECK_FALSE(parse_date("").has_value());
    CHECK(format_date(*parse_date("2008-12-31")) == "2008-12-31");
}

TEST_CASE("mcs bands") {
    CHECK(mcs_band_of(0) == McsBand::low);
    CHECK(mcs_band_of(4) == McsBand::low);
    CHECK(mcs_band_of(5) == McsBand::intermediate);
    CHECK(mcs_band_of(9) == McsBand::intermediate);
    CHECK(mcs_band_of(10) == McsBand::high);
}

TEST_CASE("default configuration") {
    IngestConfig c;
    CHECK(c.observation_days == 365);
    CHECK(c.weeks == 52);
    CHECK(c.coverage_threshold == 4);
    CHECK(c.overlap == OverlapPolicy::carry_forward);
    CHECK(c.channels == std::vector<std::string>{"RAS", "BB", "AA"});
    CHECK_NOTHROW(c.validate());
    c.coverage_threshold = 8;
    CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("parse a two-patient fixture") {
    std::istringstream pats(std::string(kPatientsHeader) +
                            "A,2010-01-01,M,71,3,0,12,2012-01-01,censored\n"
                            "B,2010-03-05,F,80,11,2,30,2011-06-01,death\n");
    std::istringstream evs(std::string(kEventsHeader) +
                           "A,RAS,2010-01-05,30\nA,BB,2010-02-01,60\nB,AA,2010-03-05,90\n");
    auto in = parse_inputs(pats, evs, kDefaultChannels);
    REQUIRE(in.patients.size() == 2);
    REQUIRE(in.events.size() == 3);
    CHECK(in.patients[1].sex == Sex::female);
    CHECK(in.patients[1].mcs_band == McsBand::high);
    CHECK(in.patients[1].end_event == EndEvent::death);
    CHECK(in.events[1].channel == 1);
    CHECK(in.events[2].channel == 2);
    CHECK(in.events[2].coverage_days == 90);
}

TEST_CASE("parse errors carry line context") {
    SUBCASE("unknown drug class") {
        std::istringstream evs(std::string(kEventsHeader) + "A,RAS,2010-01-05,30\nA,XX,2010-01-05,30\n");
        try {
            parse_events(evs, kDefaultChannels);
            FAIL("expected rejection");
        } catch (const ValidationError& e) {
            CHECK(contains(e, "line 3"));
            CHECK(contains(e, "unknown drug_class"));
        }
    }
    SUBCASE("orphan events") {
        std::istringstream pats(std::string(kPatientsHeader) + "A,2010-01-01,M,71,3,0,12,2012-01-01,censored\n");
        std::istringstream evs(std::string(kEventsHeader) + "Z1,RAS,2010-01-05,30\nZ2,BB,2010-01-05,30\n");
        try {
            parse_inputs(pats, evs, kDefaultChannels);
            FAIL("expected rejection");
        } catch (const ValidationError& e) {
            CHECK(contains(e, "Z1"));
            CHECK(contains(e, "Z2"));
        }
    }
    SUBCASE("malformed date names line and column") {
        std::istringstream pats(std::string(kPatientsHeader) + "A,2010-13-01,M,71,3,0,12,2012-01-01,censored\n");
        try {
            parse_patients(pats);
            FAIL("expected rejection");
        } catch (const ValidationError& e) {
            CHECK(contains(e, "line 2, column index_date"));
        }
    }
    SUBCASE("missing column") {
        std::istringstream pats("subject_id,index_date\nA,2010-01-01\n");
        CHECK_THROWS_AS(parse_patients(pats), ValidationError);
    }
    SUBCASE("non-positive coverage") {
        std::istringstream evs(std::string(kEventsHeader) + "A,RAS,2010-01-05,0\n");
        CHECK_THROWS_AS(parse_events(evs, kDefaultChannels), ValidationError);
    }
}

TEST_CASE("incident flag column is optional") {
    std::istringstream pats(std::string("subject_id,index_date,sex,age,mcs_score,n_procedures,days_in_hospital,"
                                        "end_date,end_event,incident_flag\n") +
                            "A,2010-01-01,M,71,3,0,12,2012-01-01,censored,1\n"
                            "B,2010-01-01,M,71,3,0,12,2012-01-01,censored,0\n"
                            "C,2010-01-01,M,71,3,0,12,2012-01-01,censored,\n");
    auto p = parse_patients(pats);
    REQUIRE(p.size() == 3);
    CHECK(p[0].incident == true);
    CHECK(p[1].incident == false);
    CHECK_FALSE(p[2].incident.has_value());
}

TEST_CASE("cohort filters") {
    IngestConfig cfg;
    std::vector<PatientRecord> pats = {patient("dies100", 100, EndEvent::death),
                                       patient("cens200", 200, EndEvent::censored),
                                       patient("late", 400, EndEvent::death),
                                       patient("lonely", 200, EndEvent::censored),
                                       patient("prior", 500, EndEvent::censored),
                                       patient("unknown", 500, EndEvent::censored)};
    pats[4].incident = false;
    std::vector<PurchaseEvent> evs = {purchase("cens200", 0, 10, 30), purchase("dies100", 0, 10, 30)};
    auto sel = apply_cohort_filters(pats, evs, cfg);

    std::map<std::string, std::string> reason;
    for (const auto& e : sel.exclusions) reason[e.subject_id] = e.reason;
    CHECK(reason["dies100"] == "death_in_observation");
    CHECK(reason["lonely"] == "no_purchase_censored");
    CHECK(reason["prior"] == "non_incident");
    CHECK(sel.exclusions.size() == 3);
    std::vector<std::string> kept;
    for (const auto& p : sel.retained) kept.push_back(p.subject_id);
    CHECK(kept == std::vector<std::string>{"cens200", "late", "unknown"});

    cfg.apply_washout = false;
    CHECK(apply_cohort_filters(pats, evs, cfg).exclusions.size() == 2);
}

TEST_CASE("each excluded patient gets exactly one reason") {
    IngestConfig cfg;
    auto p = patient("both", 50, EndEvent::death);
    p.incident = false;
    auto sel = apply_cohort_filters({p}, {}, cfg);
    REQUIRE(sel.exclusions.size() == 1);
    CHECK(sel.exclusions[0].reason == "death_in_observation");
}

TEST_CASE("overlap resolution examples") {
    CHECK(resolve({{1, 30}, {15, 30}}, OverlapPolicy::carry_forward) ==
          std::vector<DayInterval>{{1, 30}, {31, 60}});
    CHECK(resolve({{1, 30}, {15, 30}}, OverlapPolicy::truncate) == std::vector<DayInterval>{{1, 30}, {31, 44}});
    CHECK(resolve({{350, 30}}, OverlapPolicy::carry_forward) == std::vector<DayInterval>{{350, 365}});
    CHECK(resolve({}, OverlapPolicy::carry_forward).empty());
}

TEST_CASE("overlap resolution sorts internally") {
    CHECK(resolve({{15, 30}, {1, 30}}, OverlapPolicy::carry_forward) ==
          std::vector<DayInterval>{{1, 30}, {31, 60}});
    // Same day: the longer purchase is placed first.
    CHECK(resolve({{5, 10}, {5, 20}}, OverlapPolicy::truncate) == std::vector<DayInterval>{{5, 24}});
    CHECK(resolve({{5, 10}, {5, 20}}, OverlapPolicy::carry_forward) == std::vector<DayInterval>{{5, 24}, {25, 34}});
    // Carry-forward can push coverage past the window, where it is clipped.
    CHECK(resolve({{300, 60}, {310, 60}}, OverlapPolicy::carry_forward) == std::vector<DayInterval>{{300, 359}, {360, 365}});
}

TEST_CASE("overlap resolution properties on random purchase sets") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> n_d(0, 12), day_d(1, 400), cov_d(1, 120);
    for (int rep = 0; rep < 10000; ++rep) {
        std::vector<DayPurchase> p(n_d(rng));
        long total = 0;
        for (auto& x : p) {
            x = {day_d(rng), cov_d(rng)};
            total += x.coverage_days;
        }
        for (auto pol : {OverlapPolicy::carry_forward, OverlapPolicy::truncate}) {
            auto iv = resolve_overlaps(p, pol, 365);
            int covered = 0;
            for (std::size_t i = 0; i < iv.size(); ++i) {
                REQUIRE(iv[i].start >= 1);
                REQUIRE(iv[i].end <= 365);
                REQUIRE(iv[i].start <= iv[i].end);
                if (i) REQUIRE(iv[i - 1].end < iv[i].start);
                covered += iv[i].days();
            }
            REQUIRE(covered <= total);
            REQUIRE(covered <= 365);
        }
    }
}

TEST_CASE("weekly discretization boundary") {
    CHECK(build_channel_sequence(timeline_of({{1, 7}}), 52, 4).states[0] == kDrugState);
    CHECK(build_channel_sequence(timeline_of({{1, 4}}), 52, 4).states[0] == kDrugState);
    CHECK(build_channel_sequence(timeline_of({{1, 3}}), 52, 4).states[0] == kNoDrugState);
    // Four days split over two intervals inside week 2.
    auto s = build_channel_sequence(timeline_of({{8, 9}, {13, 14}}), 52, 4);
    CHECK(s.states[0] == kNoDrugState);
    CHECK(s.states[1] == kDrugState);
    // Week 2 spans days 8..14; days 11..14 are four days, 12..14 three.
    CHECK(build_channel_sequence(timeline_of({{11, 20}}), 52, 4).states[1] == kDrugState);
    CHECK(build_channel_sequence(timeline_of({{12, 20}}), 52, 4).states[1] == kNoDrugState);
}

TEST_CASE("empty timeline gives 52 NoDrug weeks") {
    auto s = build_channel_sequence(timeline_of({}), 52, 4);
    CHECK(s.length() == 52);
    CHECK(std::all_of(s.states.begin(), s.states.end(), [](State x) { return x == kNoDrugState; }));
}

TEST_CASE("day 365 is ignored") {
    auto s = build_channel_sequence(timeline_of({{362, 365}}), 52, 4);
    CHECK(s.states[51] == kNoDrugState);
    auto t = build_channel_sequence(timeline_of({{361, 365}}), 52, 4);
    CHECK(t.states[51] == kDrugState);
}

TEST_CASE("adding coverage never turns Drug into NoDrug") {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> start_d(1, 365), len_d(1, 60), n_d(0, 6);
    for (int rep = 0; rep < 2000; ++rep) {
        std::vector<DayPurchase> p(n_d(rng));
        for (auto& x : p) x = {start_d(rng), len_d(rng)};
        auto base = build_channel_sequence(timeline_of(resolve(p, OverlapPolicy::carry_forward)), 52, 4);
        std::vector<DayInterval> more = resolve(p, OverlapPolicy::carry_forward);
        const int s = start_d(rng);
        more.push_back({s, std::min(365, s + len_d(rng))});
        auto grown = build_channel_sequence(timeline_of(more), 52, 4);
        for (std::size_t w = 0; w < 52; ++w)
            if (base.states[w] == kDrugState) REQUIRE(grown.states[w] == kDrugState);
    }
}

TEST_CASE("event-level resolution") {
    IngestConfig cfg;
    auto p = patient("A", 500, EndEvent::censored);
    std::vector<PurchaseEvent> evs = {purchase("A", 0, -5, 30), purchase("A", 0, 0, 7), purchase("A", 1, 10, 7),
                                      purchase("A", 0, 400, 30), purchase("B", 0, 20, 7)};
    std::vector<std::string> warnings;
    auto tl = resolve_overlaps(p, 0, evs, cfg, &warnings);
    CHECK(tl.intervals == std::vector<DayInterval>{{1, 7}});
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("pre-index") != std::string::npos);
    CHECK(tl.covered_days() == 7);
}

TEST_CASE("build_sequences orders by subject id and combines channels") {
    IngestConfig cfg;
    std::vector<PatientRecord> pats = {patient("B", 500, EndEvent::censored), patient("A", 500, EndEvent::censored)};
    std::vector<PurchaseEvent> evs = {purchase("A", 0, 1, 364), purchase("A", 1, 1, 364), purchase("B", 2, 1, 14)};
    auto out = build_sequences(pats, evs, cfg);
    REQUIRE(out.combined.size() == 2);
    CHECK(out.combined[0].subject_id == "A");
    CHECK(out.combined.length() == 52);
    const auto& ea = *out.combined.alphabet();
    CHECK(ea.label(out.combined[0].states[0]) == "RAS+BB");
    CHECK(ea.label(out.combined[0].states[51]) == "RAS+BB");
    CHECK(ea.label(out.combined[1].states[0]) == "AA");
    CHECK(ea.label(out.combined[1].states[1]) == "AA");
    CHECK(ea.label(out.combined[1].states[2]) == "None");
    REQUIRE(out.channels.size() == 3);
    CHECK(out.channels[2][1].states[0] == kDrugState);
}

TEST_CASE("threshold changes only weeks with exactly four covered days") {
    std::vector<PatientRecord> pats = {patient("A", 500, EndEvent::censored)};
    // Day 1 gives week 1 fully covered; day 11 covers days 11..14 of week 2
    // (four days) and spills 3 days into week 3.
    std::vector<PurchaseEvent> evs = {purchase("A", 0, 1, 7), purchase("A", 0, 11, 7)};
    IngestConfig four, five;
    five.coverage_threshold = 5;
    auto a = build_sequences(pats, evs, four).channels[0][0].states;
    auto b = build_sequences(pats, evs, five).channels[0][0].states;
    std::vector<std::size_t> diff;
    for (std::size_t w = 0; w < 52; ++w)
        if (a[w] != b[w]) diff.push_back(w);
    CHECK(diff == std::vector<std::size_t>{1});
    CHECK(a[0] == kDrugState);
    CHECK(a[2] == kNoDrugState);
}

TEST_CASE("survival records start after the observation window") {
    std::vector<PatientRecord> pats = {patient("A", 465, EndEvent::death), patient("B", 365, EndEvent::censored),
                                       patient("C", 1000, EndEvent::censored)};
    auto s = survival_records(pats, 365);
    REQUIRE(s.size() == 2);
    CHECK(s[0].subject_id == "A");
    CHECK(s[0].time == 100);
    CHECK(s[0].event == 1);
    CHECK(s[1].time == 635);
    CHECK(s[1].event == 0);

    std::stringstream buf;
    write_survival_csv(buf, s);
    auto back = read_survival_csv(buf);
    REQUIRE(back.size() == 2);
    CHECK(back[1].subject_id == "C");
    CHECK(back[1].time == 635);
}

TEST_CASE("patient CSV round trip") {
    auto a = patient("A", 700, EndEvent::death);
    a.sex = Sex::female;
    a.mcs_score = 7;
    a.mcs_band = McsBand::intermediate;
    a.incident = true;
    std::stringstream buf;
    write_patients_csv(buf, {a, patient("B", 900, EndEvent::censored)});
    auto back = parse_patients(buf);
    REQUIRE(back.size() == 2);
    CHECK(back[0].sex == Sex::female);
    CHECK(back[0].mcs_band == McsBand::intermediate);
    CHECK(back[0].end_date == a.end_date);
    CHECK(back[0].incident == true);
    CHECK_FALSE(back[1].incident.has_value());
}

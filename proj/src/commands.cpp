#include "ssa/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "ssa/cluster.hpp"
#include "ssa/config.hpp"
#include "ssa/csv.hpp"
#include "ssa/descriptives.hpp"
#include "ssa/dissim.hpp"
#include "ssa/error.hpp"
#include "ssa/ingest.hpp"
#include "ssa/plots.hpp"
#include "ssa/survstats.hpp"
#include "ssa/synthcohort.hpp"

#ifndef SSA_VERSION
#define SSA_VERSION "0.0.0"
#endif

namespace ssa::cli {

namespace fs = std::filesystem;

std::string channel_file(const std::string& channel) { return "seq_" + channel + ".csv"; }

namespace {

void log(const char* level, const std::string& msg) {
    std::string quoted;
    for (char c : msg) {
        if (c == '"' || c == '\\') quoted += '\\';
        quoted += c == '\n' ? ' ' : c;
    }
    std::cerr << "level=" << level << " msg=\"" << quoted << "\"\n";
}

fs::path require(const RunConfig& c, const char* name) {
    fs::path p = c.dir / name;
    if (!fs::exists(p)) throw ValidationError("missing upstream artifact: " + p.string());
    return p;
}

void write_json(const fs::path& p, const nlohmann::json& j) { csv::write_file(p, j.dump(2) + "\n"); }

nlohmann::json read_json(const fs::path& p) {
    auto in = csv::open_in(p);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(p.string() + ": " + e.what());
    }
}

std::map<std::string, int> read_clusters(const fs::path& p, int& k) {
    auto t = csv::read_file(p);
    if (t.header != std::vector<std::string>{"subject_id", "cluster"})
        throw ValidationError(p.string() + ": header must be subject_id,cluster");
    std::map<std::string, int> out;
    k = 0;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        int c = 0;
        try {
            c = row.size() == 2 ? std::stoi(row[1]) : 0;
        } catch (const std::exception&) {
            c = 0;
        }
        if (c < 1) throw ValidationError(p.string() + " line " + std::to_string(t.line_numbers[r]) + ": bad cluster");
        out[row[0]] = c - 1;
        k = std::max(k, c);
    }
    return out;
}

SequenceSet read_combined(const RunConfig& c) {
    return read_sequence_csv(require(c, files::combined), Alphabet::extended(c.ingest.channels));
}

int cmd_simulate(const RunConfig& c) {
    GeneratorConfig g = default_generator_config();
    g.n_patients = c.n_patients;
    g.seed = c.seed;
    g.channels = c.ingest.channels;
    g.observation_days = c.ingest.observation_days;
    g.weeks = c.ingest.weeks;
    g.observation_death_rate = c.observation_death_rate;
    auto cohort = generate(g);
    write_cohort(c.dir, cohort, g);
    log("info", "simulated " + std::to_string(cohort.patients.size()) + " patients, " +
                    std::to_string(cohort.events.size()) + " purchases");
    return kExitOk;
}

int cmd_ingest(const RunConfig& c) {
    auto in = parse_inputs(require(c, files::patients), require(c, files::events), c.ingest.channels);
    auto sel = apply_cohort_filters(in.patients, in.events, c.ingest);
    std::set<std::string> kept;
    for (const auto& p : sel.retained) kept.insert(p.subject_id);
    std::vector<PurchaseEvent> events;
    for (const auto& e : in.events)
        if (kept.count(e.subject_id)) events.push_back(e);
    std::ostringstream p, e, x, s;
    write_patients_csv(p, sel.retained);
    write_events_csv(e, events, c.ingest.channels);
    write_exclusions_csv(x, sel.exclusions);
    auto surv = survival_records(sel.retained, c.ingest.observation_days);
    write_survival_csv(s, surv);
    csv::write_file(c.dir / files::cohort_patients, p.str());
    csv::write_file(c.dir / files::cohort_events, e.str());
    csv::write_file(c.dir / files::exclusions, x.str());
    csv::write_file(c.dir / files::survival, s.str());
    log("info", "retained " + std::to_string(sel.retained.size()) + " of " + std::to_string(in.patients.size()) +
                    " patients; " + std::to_string(sel.exclusions.size()) + " excluded");
    return kExitOk;
}

int cmd_build(const RunConfig& c) {
    auto in = parse_inputs(require(c, files::cohort_patients), require(c, files::cohort_events), c.ingest.channels);
    std::vector<std::string> warnings;
    auto seqs = build_sequences(in.patients, in.events, c.ingest, &warnings);
    for (const auto& w : warnings) log("warn", w);
    for (std::size_t ch = 0; ch < c.ingest.channels.size(); ++ch)
        write_sequence_csv(c.dir / channel_file(c.ingest.channels[ch]), seqs.channels[ch]);
    write_sequence_csv(c.dir / files::combined, seqs.combined);
    log("info", "built " + std::to_string(seqs.combined.size()) + " sequences of length " +
                    std::to_string(seqs.combined.length()));
    return kExitOk;
}

int cmd_stats(const RunConfig& c) {
    auto set = read_combined(c);
    write_json(c.dir / files::state_distribution, to_json(state_distribution(set)));
    write_json(c.dir / files::transitions, to_json(transition_rates(set)));
    return kExitOk;
}

int cmd_dist(const RunConfig& c) {
    auto set = read_combined(c);
    CostModel cost = c.cost == CostKind::trate
                         ? trate_costs(transition_rates(set), c.cval, c.indel)
                         : constant_costs(set.alphabet()->size(), c.indel, c.constant_sub);
    const auto start = std::chrono::steady_clock::now();
    auto d = distance_matrix(set, cost, c.threads);
    const auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_json(c.dir / files::costs, to_json(cost));
    write_binary(c.dir / files::distances, d);
    if (c.dense_csv) {
        std::ostringstream out;
        write_dense_csv(out, d);
        csv::write_file(c.dir / files::distances_csv, out.str());
    }
    std::ostringstream msg;
    msg << "computed " << d.condensed().size() << " dissimilarities in " << secs << " s";
    log("info", msg.str());
    return kExitOk;
}

int cmd_cluster(const RunConfig& c) {
    auto d = read_binary(require(c, files::distances));
    const int n = static_cast<int>(d.size());
    int k_max = c.k_max;
    if (k_max > n - 1) {
        k_max = n - 1;
        log("warn", "k_max clamped to " + std::to_string(k_max));
    }
    auto report = select_k(d, c.k_min, k_max);
    const ScoredPartition* chosen = &report.best();
    if (c.forced_k != 0 || c.partition != PartitionChoice::automatic) {
        const int k = c.forced_k != 0 ? c.forced_k : chosen->k;
        const auto m = c.partition == PartitionChoice::pam ? ClusterMethod::pam
                       : c.partition == PartitionChoice::hierarchical ? ClusterMethod::hierarchical
                                                                      : chosen->method;
        chosen = &report.find(k, m);
    }
    std::ostringstream out;
    out << "subject_id,cluster\n";
    for (std::size_t i = 0; i < d.size(); ++i)
        out << d.subject_ids()[i] << ',' << chosen->partition.labels[i] + 1 << '\n';
    csv::write_file(c.dir / files::clusters, out.str());
    auto q = to_json(report, d.subject_ids());
    q["exported"] = {{"k", chosen->k}, {"method", to_string(chosen->method)}};
    write_json(c.dir / files::quality, q);
    write_json(c.dir / files::dendrogram, to_json(report.dendrogram));
    log("info", "exported k=" + std::to_string(chosen->k) + " " + to_string(chosen->method) + " partition");
    return kExitOk;
}

std::vector<PatientRecord> read_cohort(const RunConfig& c) {
    auto in = csv::open_in(require(c, files::cohort_patients));
    return parse_patients(in);
}

int cmd_fit_cox(const RunConfig& c) {
    auto patients = read_cohort(c);
    auto sin = csv::open_in(require(c, files::survival));
    auto surv = read_survival_csv(sin);
    int k = 0;
    auto clusters = read_clusters(require(c, files::clusters), k);
    CovariateOptions opt;
    opt.reference_cluster = c.reference_cluster - 1;
    auto ds = assemble_cox_data(patients, surv, clusters, k, opt);
    for (const auto& name : ds.dropped) log("warn", "dropped constant covariate " + name);
    auto fit = cox_fit(ds.x, ds.times, ds.events, ds.names);
    if (!fit.converged) log("warn", fit.warning);
    auto j = to_json(fit);
    j["reference_cluster"] = c.reference_cluster;
    j["dropped"] = ds.dropped;
    j["n"] = ds.times.size();
    j["events"] = std::count(ds.events.begin(), ds.events.end(), 1);
    write_json(c.dir / files::cox, j);
    return kExitOk;
}

int cmd_compare(const RunConfig& c) {
    auto patients = read_cohort(c);
    int k = 0;
    auto clusters = read_clusters(require(c, files::clusters), k);
    if (c.reference_cluster > k || c.compare_with > k)
        throw ValidationError("compare: cluster ids must be within 1.." + std::to_string(k));
    auto table = compare_clusters(patients, clusters, c.reference_cluster - 1, c.compare_with - 1);
    std::ostringstream out;
    write_comparison_csv(out, table);
    csv::write_file(c.dir / files::comparison_csv, out.str());
    write_json(c.dir / files::comparison_json, to_json(table));
    return kExitOk;
}

int cmd_report(const RunConfig& c) {
    std::vector<std::string> missing;
    for (const char* f : {files::state_distribution, files::transitions, files::combined, files::clusters, files::cox})
        if (!fs::exists(c.dir / f)) missing.push_back("missing stage output: " + (c.dir / f).string());
    if (!missing.empty()) throw ValidationError(std::move(missing));

    auto dist = state_distribution_from_json(read_json(c.dir / files::state_distribution));
    auto trans = transition_matrix_from_json(read_json(c.dir / files::transitions));
    auto set = read_combined(c);
    int k = 0;
    auto clusters = read_clusters(c.dir / files::clusters, k);
    Labels labels;
    for (const auto& s : set.sequences()) {
        auto it = clusters.find(s.subject_id);
        labels.push_back(it == clusters.end() ? k : it->second);
    }
    auto fit = cox_fit_from_json(read_json(c.dir / files::cox));
    csv::write_file(c.dir / files::plot_distribution, plot::state_distribution(dist));
    csv::write_file(c.dir / files::plot_index, plot::sequence_index(set, labels));
    csv::write_file(c.dir / files::plot_transitions, plot::transition_heatmap(trans));
    csv::write_file(c.dir / files::plot_forest, plot::hazard_forest(fit));
    log("info", "wrote 4 plots to " + c.dir.string());
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"State-sequence analysis of drug-utilization trajectories"};
    app.set_version_flag("--version", SSA_VERSION);
    app.require_subcommand(1);
    app.fallthrough();

    std::string dir = ".", config_path, overlap, cost, partition;
    RunConfig flags;
    app.add_option("--dir", dir, "working directory holding all stage files");
    app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    auto* o_obs = app.add_option("--observation-days", flags.ingest.observation_days);
    auto* o_weeks = app.add_option("--weeks", flags.ingest.weeks);
    auto* o_thr = app.add_option("--threshold", flags.ingest.coverage_threshold, "covered days out of 7 for Drug");
    auto* o_overlap = app.add_option("--overlap", overlap, "carry_forward | truncate");
    auto* o_cost = app.add_option("--cost", cost, "trate | constant");
    auto* o_cval = app.add_option("--cval", flags.cval);
    auto* o_indel = app.add_option("--indel", flags.indel);
    auto* o_sub = app.add_option("--sub", flags.constant_sub, "constant substitution cost");
    auto* o_kmin = app.add_option("--k-min", flags.k_min);
    auto* o_kmax = app.add_option("--k-max", flags.k_max);
    auto* o_k = app.add_option("--k", flags.forced_k, "export this k instead of the selected one");
    auto* o_part = app.add_option("--partition", partition, "auto | hierarchical | pam");
    auto* o_ref = app.add_option("--reference-cluster", flags.reference_cluster);
    auto* o_cmp = app.add_option("--compare-with", flags.compare_with);
    auto* o_seed = app.add_option("--seed", flags.seed);
    auto* o_n = app.add_option("--n", flags.n_patients);
    auto* o_odr = app.add_option("--observation-death-rate", flags.observation_death_rate);
    auto* o_threads = app.add_option("--threads", flags.threads);
    auto* o_dense = app.add_flag("--dense-csv", flags.dense_csv);

    using Handler = int (*)(const RunConfig&);
    const std::vector<std::tuple<const char*, const char*, Handler>> commands = {
        {"simulate", "generate a synthetic cohort", cmd_simulate},
        {"ingest", "parse inputs and apply cohort filters", cmd_ingest},
        {"build", "build weekly channel and combined sequences", cmd_build},
        {"stats", "state distribution and transition rates", cmd_stats},
        {"dist", "pairwise Optimal Matching dissimilarities", cmd_dist},
        {"cluster", "Ward + PAM clustering with quality indices", cmd_cluster},
        {"fit-cox", "Cox model with cluster covariates", cmd_fit_cox},
        {"compare", "compare two clusters' characteristics", cmd_compare},
        {"report", "SVG plots from all stage outputs", cmd_report},
    };
    std::map<CLI::App*, Handler> handlers;
    for (const auto& [name, desc, fn] : commands) handlers[app.add_subcommand(name, desc)] = fn;

    std::vector<std::string> argv_store{"ssa"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_store) argv.push_back(a.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    try {
        RunConfig c;
        if (!config_path.empty()) c = run_config_from_json(read_json(config_path), c);
        if (app.count("--dir")) c.dir = dir;
        if (o_obs->count()) c.ingest.observation_days = flags.ingest.observation_days;
        if (o_weeks->count()) c.ingest.weeks = flags.ingest.weeks;
        if (o_thr->count()) c.ingest.coverage_threshold = flags.ingest.coverage_threshold;
        if (o_overlap->count()) c.ingest.overlap = parse_overlap_policy(overlap);
        if (o_cost->count()) c.cost = parse_cost_kind(cost);
        if (o_cval->count()) c.cval = flags.cval;
        if (o_indel->count()) c.indel = flags.indel;
        if (o_sub->count()) c.constant_sub = flags.constant_sub;
        if (o_kmin->count()) c.k_min = flags.k_min;
        if (o_kmax->count()) c.k_max = flags.k_max;
        if (o_k->count()) c.forced_k = flags.forced_k;
        if (o_part->count()) c.partition = parse_partition_choice(partition);
        if (o_ref->count()) c.reference_cluster = flags.reference_cluster;
        if (o_cmp->count()) c.compare_with = flags.compare_with;
        if (o_seed->count()) c.seed = flags.seed;
        if (o_n->count()) c.n_patients = flags.n_patients;
        if (o_odr->count()) c.observation_death_rate = flags.observation_death_rate;
        if (o_threads->count()) c.threads = flags.threads;
        if (o_dense->count()) c.dense_csv = flags.dense_csv;
        c.validate();
        if (!fs::is_directory(c.dir)) {
            std::error_code ec;
            fs::create_directories(c.dir, ec);
            if (ec) throw IoError("cannot create directory " + c.dir.string());
        }
        for (const auto& [sub, fn] : handlers)
            if (sub->parsed()) return fn(c);
        return kExitValidation;
    } catch (const ValidationError& e) {
        for (const auto& v : e.violations()) log("error", v);
        return kExitValidation;
    } catch (const IoError& e) {
        log("error", e.what());
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        log("error", e.what());
        return kExitIo;
    }
}

}  // namespace ssa::cli

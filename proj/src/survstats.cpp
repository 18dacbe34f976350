#include "ssa/survstats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include <boost/math/special_functions/gamma.hpp>

#include "ssa/error.hpp"

namespace ssa {

namespace {

double normal_two_sided_p(double z) { return std::erfc(std::fabs(z) / std::sqrt(2.0)); }

void check_dims(const Eigen::MatrixXd& x, std::span<const double> times, std::span<const int> events) {
    const auto n = static_cast<std::size_t>(x.rows());
    if (times.size() != n || events.size() != n)
        throw ValidationError("cox: X, times and events must have the same number of rows");
    if (std::none_of(events.begin(), events.end(), [](int e) { return e == 1; }))
        throw ValidationError("cox: at least one event is required");
    for (int e : events)
        if (e != 0 && e != 1) throw ValidationError("cox: events must be 0 or 1");
}

}  // namespace

CoxEvaluation cox_partial_loglik(const Eigen::MatrixXd& x, std::span<const double> times,
                                 std::span<const int> events, const Eigen::VectorXd& beta) {
    check_dims(x, times, events);
    const Eigen::Index n = x.rows(), p = x.cols();
    if (beta.size() != p) throw ValidationError("cox: beta length does not match X columns");

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](auto a, auto b) { return times[a] > times[b]; });

    const Eigen::VectorXd eta = x * beta;
    const double shift = eta.maxCoeff();

    CoxEvaluation ev;
    ev.gradient = Eigen::VectorXd::Zero(p);
    ev.hessian = Eigen::MatrixXd::Zero(p, p);
    double s0 = 0;
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(p, p);

    std::size_t pos = 0;
    while (pos < order.size()) {
        std::size_t end = pos;
        while (end < order.size() && times[order[end]] == times[order[pos]]) ++end;
        // Everyone tied at this time is in the risk set.
        for (std::size_t t = pos; t < end; ++t) {
            const auto i = order[t];
            const double w = std::exp(eta[i] - shift);
            s0 += w;
            s1.noalias() += w * x.row(i).transpose();
            s2.noalias() += w * x.row(i).transpose() * x.row(i);
        }
        int deaths = 0;
        for (std::size_t t = pos; t < end; ++t) {
            const auto i = order[t];
            if (events[i] != 1) continue;
            ++deaths;
            ev.loglik += eta[i];
            ev.gradient.noalias() += x.row(i).transpose();
        }
        if (deaths > 0) {
            const double d = deaths;
            const Eigen::VectorXd mean = s1 / s0;
            ev.loglik -= d * (std::log(s0) + shift);
            ev.gradient.noalias() -= d * mean;
            ev.hessian.noalias() -= d * (s2 / s0 - mean * mean.transpose());
        }
        pos = end;
    }
    return ev;
}

CoxModelFit cox_fit(const Eigen::MatrixXd& x, std::span<const double> times, std::span<const int> events,
                    std::vector<std::string> names, const CoxFitOptions& options) {
    check_dims(x, times, events);
    const Eigen::Index n = x.rows(), p = x.cols();
    if (static_cast<Eigen::Index>(names.size()) != p) throw ValidationError("cox: one name per column required");
    if (p == 0) throw ValidationError("cox: design matrix has no columns");

    std::vector<std::string> constant;
    for (Eigen::Index j = 0; j < p; ++j)
        if ((x.col(j).array() == x(0, j)).all()) constant.push_back(names[j]);
    if (!constant.empty()) {
        std::string list;
        for (const auto& c : constant) list += (list.empty() ? "" : ", ") + c;
        throw ValidationError("cox: constant column(s): " + list);
    }
    Eigen::MatrixXd z = x.rowwise() - x.colwise().mean();
    for (Eigen::Index j = 0; j < p; ++j) z.col(j) /= z.col(j).norm();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
    qr.setThreshold(1e-10);
    if (qr.rank() < p || n <= p) {
        std::string list;
        const auto& perm = qr.colsPermutation().indices();
        for (Eigen::Index r = qr.rank(); r < p; ++r) list += (list.empty() ? "" : ", ") + names[perm[r]];
        throw ValidationError("cox: collinear design, dependent column(s): " + list);
    }

    CoxModelFit fit;
    fit.names = std::move(names);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    auto ev = cox_partial_loglik(x, times, events, beta);
    fit.loglik_trace.push_back(ev.loglik);
    for (int it = 0; it < options.max_iterations; ++it) {
        Eigen::LDLT<Eigen::MatrixXd> ldlt(-ev.hessian);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
            fit.warning = "information matrix not positive definite";
            break;
        }
        const Eigen::VectorXd step = ldlt.solve(ev.gradient);
        double scale = 1.0;
        Eigen::VectorXd trial = beta + step;
        auto next = cox_partial_loglik(x, times, events, trial);
        int halvings = 0;
        while (!(next.loglik >= ev.loglik) && halvings < options.max_halvings) {
            scale *= 0.5;
            trial = beta + scale * step;
            next = cox_partial_loglik(x, times, events, trial);
            ++halvings;
        }
        fit.iterations = it + 1;
        if (!(next.loglik >= ev.loglik)) {
            fit.warning = "step halving failed to increase the log-likelihood";
            break;
        }
        const double change = next.loglik - ev.loglik;
        beta = trial;
        ev = std::move(next);
        fit.loglik_trace.push_back(ev.loglik);
        if (std::fabs(change) < options.tolerance) {
            fit.converged = true;
            break;
        }
    }
    if (fit.converged) {
        // The likelihood can flatten while a coefficient is still running off
        // to infinity; the remaining Newton step exposes that.
        Eigen::LDLT<Eigen::MatrixXd> ldlt(-ev.hessian);
        const Eigen::VectorXd rest = ldlt.solve(ev.gradient);
        std::string list;
        for (Eigen::Index j = 0; j < p; ++j)
            if (!std::isfinite(rest[j]) ||
                (std::fabs(rest[j]) > options.tolerance && std::fabs(rest[j]) > 3e-5 * std::fabs(beta[j])))
                list += (list.empty() ? "" : ", ") + fit.names[j];
        if (!list.empty()) {
            fit.converged = false;
            fit.warning = "log-likelihood converged before coefficient(s) " + list +
                          "; estimate may be infinite (monotone likelihood)";
        }
    }
    if (!fit.converged && fit.warning.empty())
        fit.warning = "no convergence after " + std::to_string(options.max_iterations) +
                      " iterations (possible monotone likelihood)";

    fit.beta = beta;
    fit.cov = (-ev.hessian).ldlt().solve(Eigen::MatrixXd::Identity(p, p));
    fit.cov = 0.5 * (fit.cov + fit.cov.transpose());
    fit.se = fit.cov.diagonal().cwiseMax(0.0).cwiseSqrt();
    fit.hr = beta.array().exp();
    fit.ci_low = (beta.array() - 1.96 * fit.se.array()).exp();
    fit.ci_high = (beta.array() + 1.96 * fit.se.array()).exp();
    fit.p_wald.resize(p);
    for (Eigen::Index j = 0; j < p; ++j)
        fit.p_wald[j] = fit.se[j] > 0 ? normal_two_sided_p(beta[j] / fit.se[j]) : 1.0;
    return fit;
}

nlohmann::json to_json(const CoxModelFit& fit) {
    nlohmann::json covs = nlohmann::json::array();
    for (std::size_t j = 0; j < fit.names.size(); ++j) {
        const auto i = static_cast<Eigen::Index>(j);
        covs.push_back({{"name", fit.names[j]},
                        {"beta", fit.beta[i]},
                        {"se", fit.se[i]},
                        {"hr", fit.hr[i]},
                        {"ci_low", fit.ci_low[i]},
                        {"ci_high", fit.ci_high[i]},
                        {"p_wald", fit.p_wald[i]}});
    }
    return {{"covariates", covs},
            {"loglik_trace", fit.loglik_trace},
            {"converged", fit.converged},
            {"iterations", fit.iterations},
            {"warning", fit.warning},
            {"ties", "breslow"}};
}

CoxModelFit cox_fit_from_json(const nlohmann::json& j) {
    CoxModelFit fit;
    const auto& covs = j.at("covariates");
    const auto p = static_cast<Eigen::Index>(covs.size());
    fit.beta.resize(p);
    fit.se.resize(p);
    fit.hr.resize(p);
    fit.ci_low.resize(p);
    fit.ci_high.resize(p);
    fit.p_wald.resize(p);
    for (Eigen::Index i = 0; i < p; ++i) {
        const auto& c = covs[static_cast<std::size_t>(i)];
        fit.names.push_back(c.at("name").get<std::string>());
        fit.beta[i] = c.at("beta");
        fit.se[i] = c.at("se");
        fit.hr[i] = c.at("hr");
        fit.ci_low[i] = c.at("ci_low");
        fit.ci_high[i] = c.at("ci_high");
        fit.p_wald[i] = c.at("p_wald");
    }
    fit.loglik_trace = j.at("loglik_trace").get<std::vector<double>>();
    fit.converged = j.at("converged");
    fit.iterations = j.at("iterations");
    fit.warning = j.value("warning", "");
    return fit;
}

CoxDataset assemble_cox_data(const std::vector<PatientRecord>& patients,
                             const std::vector<SurvivalRecord>& survival,
                             const std::map<std::string, int>& cluster_of, int k,
                             const CovariateOptions& options) {
    if (options.reference_cluster < 0 || options.reference_cluster >= k)
        throw ValidationError("reference cluster outside [1, k]");
    std::map<std::string, const PatientRecord*> by_id;
    for (const auto& p : patients) by_id.emplace(p.subject_id, &p);

    struct Row {
        const PatientRecord* patient;
        int cluster;
        const SurvivalRecord* surv;
    };
    std::vector<Row> rows;
    std::vector<std::string> missing;
    for (const auto& s : survival) {
        auto p = by_id.find(s.subject_id);
        auto c = cluster_of.find(s.subject_id);
        if (p == by_id.end() || c == cluster_of.end()) {
            missing.push_back(s.subject_id);
            continue;
        }
        rows.push_back({p->second, c->second, &s});
    }
    if (!missing.empty())
        throw ValidationError("survival subjects without patient or cluster record: " +
                              std::to_string(missing.size()) + " (first: " + missing.front() + ")");

    std::vector<std::string> names;
    for (int g = 0; g < k; ++g)
        if (g != options.reference_cluster) names.push_back("cluster_" + std::to_string(g + 1));
    for (const char* n : {"age", "sex_female", "mcs_intermediate", "mcs_high", "procedures_1",
                          "procedures_2plus"})
        names.emplace_back(n);

    const auto n = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(names.size()));
    CoxDataset ds;
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto& row = rows[static_cast<std::size_t>(r)];
        Eigen::Index c = 0;
        for (int g = 0; g < k; ++g) {
            if (g == options.reference_cluster) continue;
            x(r, c++) = row.cluster == g ? 1.0 : 0.0;
        }
        x(r, c++) = row.patient->age;
        x(r, c++) = row.patient->sex == Sex::female ? 1.0 : 0.0;
        x(r, c++) = row.patient->mcs_band == McsBand::intermediate ? 1.0 : 0.0;
        x(r, c++) = row.patient->mcs_band == McsBand::high ? 1.0 : 0.0;
        x(r, c++) = row.patient->n_procedures == 1 ? 1.0 : 0.0;
        x(r, c++) = row.patient->n_procedures >= 2 ? 1.0 : 0.0;
        ds.subject_ids.push_back(row.patient->subject_id);
        ds.times.push_back(row.surv->time);
        ds.events.push_back(row.surv->event);
    }
    const Eigen::Index age_col = static_cast<Eigen::Index>(k - 1);
    if (options.center_age && n > 0) x.col(age_col).array() -= x.col(age_col).mean();

    std::vector<Eigen::Index> keep;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        if (n > 0 && (x.col(j).array() == x(0, j)).all())
            ds.dropped.push_back(names[static_cast<std::size_t>(j)]);
        else
            keep.push_back(j);
    }
    ds.x.resize(n, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) {
        ds.x.col(static_cast<Eigen::Index>(j)) = x.col(keep[j]);
        ds.names.push_back(names[static_cast<std::size_t>(keep[j])]);
    }
    return ds;
}

namespace {

// Midranks of the pooled values plus the tie term sum(t^3 - t).
std::vector<double> midranks(const std::vector<double>& pooled, double& tie_term) {
    const std::size_t n = pooled.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return pooled[a] < pooled[b]; });
    std::vector<double> r(n);
    tie_term = 0;
    std::size_t pos = 0;
    while (pos < n) {
        std::size_t end = pos;
        while (end + 1 < n && pooled[order[end + 1]] == pooled[order[pos]]) ++end;
        const double avg = (static_cast<double>(pos) + static_cast<double>(end)) / 2.0 + 1.0;
        for (std::size_t t = pos; t <= end; ++t) r[order[t]] = avg;
        const double ties = static_cast<double>(end - pos + 1);
        tie_term += ties * ties * ties - ties;
        pos = end + 1;
    }
    return r;
}

}  // namespace

RankSumResult wilcoxon_rank_sum(std::span<const double> x, std::span<const double> y) {
    if (x.empty() || y.empty()) throw ValidationError("rank-sum test needs two nonempty samples");
    std::vector<double> pooled(x.begin(), x.end());
    pooled.insert(pooled.end(), y.begin(), y.end());
    double tie_term = 0;
    const auto r = midranks(pooled, tie_term);
    const double n1 = static_cast<double>(x.size()), n2 = static_cast<double>(y.size());
    const double total = n1 + n2;
    const double r1 = std::accumulate(r.begin(), r.begin() + static_cast<long>(x.size()), 0.0);
    RankSumResult res;
    res.u = r1 - n1 * (n1 + 1) / 2.0;
    const double var = n1 * n2 / 12.0 * ((total + 1) - tie_term / (total * (total - 1)));
    if (!(var > 0)) return res;  // every value identical
    const double diff = res.u - n1 * n2 / 2.0;
    const double correction = diff > 0 ? 0.5 : (diff < 0 ? -0.5 : 0.0);
    res.z = (diff - correction) / std::sqrt(var);
    res.p = std::min(1.0, normal_two_sided_p(res.z));
    return res;
}

KruskalWallisResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) throw ValidationError("Kruskal-Wallis needs at least two groups");
    std::vector<double> pooled;
    for (const auto& g : groups) {
        if (g.empty()) throw ValidationError("Kruskal-Wallis groups must be nonempty");
        pooled.insert(pooled.end(), g.begin(), g.end());
    }
    double tie_term = 0;
    const auto r = midranks(pooled, tie_term);
    const double n = static_cast<double>(pooled.size());
    double acc = 0;
    std::size_t offset = 0;
    for (const auto& g : groups) {
        double sum = 0;
        for (std::size_t i = 0; i < g.size(); ++i) sum += r[offset + i];
        acc += sum * sum / static_cast<double>(g.size());
        offset += g.size();
    }
    KruskalWallisResult res;
    res.df = static_cast<int>(groups.size()) - 1;
    const double correction = 1.0 - tie_term / (n * n * n - n);
    if (!(correction > 0)) return res;
    res.h = std::max(0.0, (12.0 / (n * (n + 1)) * acc - 3.0 * (n + 1)) / correction);
    res.p = boost::math::gamma_q(res.df / 2.0, res.h / 2.0);
    return res;
}

namespace {

std::string fmt(const char* pattern, double a, double b) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, a, b);
    return buf;
}

std::string mean_sd(const std::vector<double>& v) {
    if (v.empty()) return "NA";
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    return fmt("%.1f (%.1f)", mean, sd);
}

std::string count_pct(const std::vector<double>& codes, double level) {
    const auto c = static_cast<double>(std::count(codes.begin(), codes.end(), level));
    return fmt("%.0f (%.1f)", c, codes.empty() ? 0.0 : 100.0 * c / static_cast<double>(codes.size()));
}

}  // namespace

ComparisonTable compare_clusters(const std::vector<PatientRecord>& patients,
                                 const std::map<std::string, int>& cluster_of, int cluster_a,
                                 int cluster_b) {
    std::vector<const PatientRecord*> ga, gb;
    for (const auto& p : patients) {
        auto it = cluster_of.find(p.subject_id);
        if (it == cluster_of.end()) continue;
        if (it->second == cluster_a) ga.push_back(&p);
        if (it->second == cluster_b) gb.push_back(&p);
    }
    if (ga.empty() || gb.empty()) throw ValidationError("compare_clusters: both clusters must be nonempty");

    auto column = [](const std::vector<const PatientRecord*>& g, auto f) {
        std::vector<double> v;
        for (auto* p : g) v.push_back(f(*p));
        return v;
    };

    ComparisonTable t;
    t.cluster_a = cluster_a;
    t.cluster_b = cluster_b;
    t.rows.push_back({"n_patients", "", std::to_string(ga.size()), std::to_string(gb.size()), std::nullopt});

    auto continuous = [&](const char* name, auto f) {
        const auto a = column(ga, f), b = column(gb, f);
        t.rows.push_back({name, "mean (sd)", mean_sd(a), mean_sd(b), wilcoxon_rank_sum(a, b).p});
    };
    auto categorical = [&](const char* name, std::vector<std::string> levels, auto f) {
        const auto a = column(ga, f), b = column(gb, f);
        const double p = kruskal_wallis({a, b}).p;
        for (std::size_t l = 0; l < levels.size(); ++l)
            t.rows.push_back({name, levels[l] + " (%)", count_pct(a, static_cast<double>(l)),
                              count_pct(b, static_cast<double>(l)),
                              l == 0 ? std::optional<double>(p) : std::nullopt});
    };

    continuous("age", [](const PatientRecord& p) { return static_cast<double>(p.age); });
    categorical("sex", {"Male", "Female"},
                [](const PatientRecord& p) { return p.sex == Sex::female ? 1.0 : 0.0; });
    categorical("death", {"0", "1"},
                [](const PatientRecord& p) { return p.end_event == EndEvent::death ? 1.0 : 0.0; });
    continuous("days_in_hospital", [](const PatientRecord& p) { return static_cast<double>(p.days_in_hospital); });
    categorical("total_procedures", {"0", "1", ">=2"},
                [](const PatientRecord& p) { return static_cast<double>(std::min(p.n_procedures, 2)); });
    categorical("mcs", {"Low", "Intermediate", "High"},
                [](const PatientRecord& p) { return static_cast<double>(static_cast<int>(p.mcs_band)); });
    return t;
}

void write_comparison_csv(std::ostream& out, const ComparisonTable& table) {
    out << "variable,value,cluster_" << table.cluster_a + 1 << ",cluster_" << table.cluster_b + 1
        << ",p_value\n";
    for (const auto& r : table.rows) {
        out << r.variable << ',' << r.value << ',' << r.cluster_a << ',' << r.cluster_b << ',';
        if (r.p_value) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.6g", *r.p_value);
            out << buf;
        }
        out << '\n';
    }
}

nlohmann::json to_json(const ComparisonTable& table) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : table.rows)
        rows.push_back({{"variable", r.variable},
                        {"value", r.value},
                        {"cluster_a", r.cluster_a},
                        {"cluster_b", r.cluster_b},
                        {"p_value", r.p_value ? nlohmann::json(*r.p_value) : nlohmann::json(nullptr)}});
    return {{"cluster_a", table.cluster_a + 1}, {"cluster_b", table.cluster_b + 1}, {"rows", rows}};
}

}  // namespace ssa

#include "cnls/driver.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "cnls/numeric.hpp"

namespace cnls::driver {

SlopeFit fit_slope(std::span<const std::pair<double, double>> pairs) {
    if (pairs.size() < 3) throw std::invalid_argument("fit_slope: need at least 3 samples");
    std::vector<double> x, y;
    x.reserve(pairs.size());
    y.reserve(pairs.size());
    for (const auto& [eps, value] : pairs) {
        if (!(eps > 0.0) || !(value > 0.0))
            throw std::invalid_argument("fit_slope: eps and values must be positive");
        x.push_back(std::log(eps));
        y.push_back(std::log(value));
    }
    const auto f = num::fit_line(x, y);
    return {f.slope, f.intercept, f.half_width, true};
}

namespace {

std::shared_ptr<const profile::GroundStateProfile> solve_run_profile(const RunConfig& cfg) {
    return std::make_shared<profile::GroundStateProfile>(profile::solve_profile(cfg.dim, cfg.p));
}

double dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

}  // namespace

SolutionRecord solve_at(const RunConfig& cfg, const std::vector<double>& Q, double eps, bool extract) {
    const auto pset = cfg.make_potentials();
    const auto prof = solve_run_profile(cfg);
    reduce::Session session(pset, prof, Q, eps, cfg.beta, cfg.session_options());
    auto cr = session.corrector();
    if (!cr.converged) throw std::runtime_error("solve_at: corrector did not converge");

    field::FieldPair init = session.trial().fields;
    init.axpy(1.0, cr.w);

    NewtonOptions nopt;
    nopt.tol = cfg.tol_newton;
    nopt.max_iter = cfg.max_newton_iter;
    nopt.max_linear_iter = cfg.max_linear_iter;
    nopt.collapse_energy_hint = session.energy_total(session.trial().fields);
    nopt.collapse_peak_hint = session.trial().fields.max_abs();

    SolutionRecord rec = newton_solve(std::move(init), session.coefficients(), nopt);
    if (extract && rec.converged && !rec.collapsed) {
        auto [qu, qv] = extract_peaks(rec.fields, eps);
        rec.Q_eps = std::move(qu);
        rec.Qprime_eps = std::move(qv);
        rec.peaks_valid = true;
    }
    return rec;
}

SweepRecord epsilon_sweep(const RunConfig& cfg) {
    cfg.validate();
    const auto pset = cfg.make_potentials();
    const auto prof = solve_run_profile(cfg);
    const auto opts = cfg.session_options();

    SweepRecord rec;
    for (double eps : cfg.eps_list) {
        SweepRow row;
        row.eps = eps;
        try {
            reduce::Session session(pset, prof, cfg.Q0, eps, cfg.beta, opts);
            rec.c_half = session.c_half();
            rec.c_nehari = session.c_nehari();

            const auto& z = session.trial().fields;
            row.grad_ansatz_norm = field::norm(session.riesz_gradient(z));
            row.overlap_over_eps = field::overlap(z, cfg.p) / eps;

            auto cr = session.corrector();
            row.w_norm = cr.w_norm;
            row.corrector_residual = cr.residual_norm;
            row.corrector_iterations = cr.iterations;
            if (!cr.converged) throw std::runtime_error("corrector did not converge");

            const auto sample = session.reduced_energy(cr);
            row.A_value = sample.A_value;
            row.gamma_value = sample.gamma_value;
            row.disc_half = sample.disc_half;
            row.disc_nehari = sample.disc_nehari;
            row.reduced_valid = true;

            if (cfg.sweep_solve) {
                field::FieldPair init = z;
                init.axpy(1.0, cr.w);
                NewtonOptions nopt;
                nopt.tol = cfg.tol_newton;
                nopt.max_iter = cfg.max_newton_iter;
                nopt.max_linear_iter = cfg.max_linear_iter;
                nopt.collapse_energy_hint = session.energy_total(z);
                nopt.collapse_peak_hint = z.max_abs();
                auto sol = newton_solve(std::move(init), session.coefficients(), nopt);
                row.newton_grad_norm = sol.final_grad_norm;
                row.newton_iters = sol.newton_iters;
                row.min_field_value = sol.min_field_value;
                if (sol.converged && !sol.collapsed) {
                    auto [qu, qv] = extract_peaks(sol.fields, eps);
                    row.peak_sep = dist(qu, qv);
                    row.peak_sep_over_eps = row.peak_sep / eps;
                    row.dist_to_Q0 = dist(qu, cfg.Q0);
                    row.Q_eps = std::move(qu);
                    row.Qprime_eps = std::move(qv);
                    row.solved = true;
                }
            }
        } catch (const std::exception& e) {
            row.failure = e.what();
        }
        rec.rows.push_back(std::move(row));
    }

    auto collect = [&](auto&& get) {
        std::vector<std::pair<double, double>> pairs;
        for (const auto& r : rec.rows) {
            if (!r.failure.empty()) continue;
            const double v = get(r);
            if (v > 0.0) pairs.emplace_back(r.eps, v);
        }
        return pairs;
    };

    if (auto pairs = collect([](const SweepRow& r) { return r.grad_ansatz_norm; }); pairs.size() >= 3)
        rec.grad_slope = fit_slope(pairs);
    if (auto pairs = collect([](const SweepRow& r) { return r.w_norm; }); pairs.size() >= 3)
        rec.w_slope = fit_slope(pairs);

    rec.overlap_strictly_decreasing = rec.rows.size() >= 2;
    for (std::size_t i = 0; i + 1 < rec.rows.size(); ++i) {
        if (!rec.rows[i].failure.empty() || !rec.rows[i + 1].failure.empty() ||
            !(rec.rows[i + 1].overlap_over_eps < rec.rows[i].overlap_over_eps))
            rec.overlap_strictly_decreasing = false;
    }
    if (rec.rows.size() >= 2 && rec.rows.front().failure.empty() && rec.rows.back().failure.empty() &&
        rec.rows.front().overlap_over_eps > 0.0)
        rec.overlap_last_over_first = rec.rows.back().overlap_over_eps / rec.rows.front().overlap_over_eps;

    for (auto it = rec.rows.rbegin(); it != rec.rows.rend(); ++it) {
        if (it->reduced_valid) {
            rec.c_winner = std::abs(it->disc_nehari) <= std::abs(it->disc_half) ? "nehari" : "half";
            break;
        }
    }
    return rec;
}

namespace {

nlohmann::ordered_json row_json(const SweepRow& r) {
    nlohmann::ordered_json j;
    j["eps"] = r.eps;
    j["grad_ansatz_norm"] = r.grad_ansatz_norm;
    j["overlap_over_eps"] = r.overlap_over_eps;
    j["w_norm"] = r.w_norm;
    j["corrector_residual"] = r.corrector_residual;
    j["corrector_iterations"] = r.corrector_iterations;
    j["A_value"] = r.A_value;
    j["gamma_value"] = r.gamma_value;
    j["disc_half"] = r.disc_half;
    j["disc_nehari"] = r.disc_nehari;
    j["reduced_valid"] = r.reduced_valid;
    j["solved"] = r.solved;
    if (r.solved) {
        j["Q_eps"] = r.Q_eps;
        j["Qprime_eps"] = r.Qprime_eps;
        j["peak_sep"] = r.peak_sep;
        j["peak_sep_over_eps"] = r.peak_sep_over_eps;
        j["dist_to_Q0"] = r.dist_to_Q0;
        j["newton_grad_norm"] = r.newton_grad_norm;
        j["newton_iters"] = r.newton_iters;
        j["min_field_value"] = r.min_field_value;
    }
    j["failure"] = r.failure;
    return j;
}

}  // namespace

std::string sweep_to_json(const SweepRecord& rec, const RunConfig& cfg) {
    nlohmann::ordered_json j;
    j["config"] = nlohmann::ordered_json::parse(cfg.to_json());
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : rec.rows) j["rows"].push_back(row_json(r));
    j["grad_slope"] = {{"slope", rec.grad_slope.slope},
                       {"half_width", rec.grad_slope.half_width},
                       {"valid", rec.grad_slope.valid}};
    j["w_slope"] = {{"slope", rec.w_slope.slope},
                    {"half_width", rec.w_slope.half_width},
                    {"valid", rec.w_slope.valid}};
    j["overlap_strictly_decreasing"] = rec.overlap_strictly_decreasing;
    j["overlap_last_over_first"] = rec.overlap_last_over_first;
    j["c_half"] = rec.c_half;
    j["c_nehari"] = rec.c_nehari;
    j["c_winner"] = rec.c_winner;
    return j.dump(2);
}

void write_sweep_outputs(const SweepRecord& rec, const RunConfig& cfg) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);

    {
        std::ofstream out(cfg.out_dir + "/results.json");
        out << sweep_to_json(rec, cfg) << "\n";
    }

    {
        std::FILE* f = std::fopen((cfg.out_dir + "/sweep.csv").c_str(), "w");
        if (!f) throw std::runtime_error("cannot write sweep.csv");
        std::fprintf(f,
                     "eps,grad_ansatz_norm,overlap_over_eps,w_norm,corrector_residual,"
                     "corrector_iterations,A_value,gamma_value,disc_half,disc_nehari,peak_sep,"
                     "peak_sep_over_eps,dist_to_Q0,failure\n");
        for (const auto& r : rec.rows)
            std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%s\n",
                         r.eps, r.grad_ansatz_norm, r.overlap_over_eps, r.w_norm, r.corrector_residual,
                         r.corrector_iterations, r.A_value, r.gamma_value, r.disc_half, r.disc_nehari,
                         r.peak_sep, r.peak_sep_over_eps, r.dist_to_Q0, r.failure.c_str());
        std::fclose(f);
    }

    auto dat = [&](const std::string& name, auto&& get) {
        std::FILE* f = std::fopen((cfg.out_dir + "/" + name).c_str(), "w");
        if (!f) throw std::runtime_error("cannot write " + name);
        for (const auto& r : rec.rows) {
            if (!r.failure.empty()) continue;
            std::fprintf(f, "%.17g %.17g\n", r.eps, get(r));
        }
        std::fclose(f);
    };
    dat("grad_norm.dat", [](const SweepRow& r) { return r.grad_ansatz_norm; });
    dat("overlap.dat", [](const SweepRow& r) { return r.overlap_over_eps; });
    dat("w_norm.dat", [](const SweepRow& r) { return r.w_norm; });
    dat("disc_half.dat", [](const SweepRow& r) { return std::abs(r.disc_half); });
    dat("disc_nehari.dat", [](const SweepRow& r) { return std::abs(r.disc_nehari); });
}

MultiplicityOutcome multiplicity_scan(const RunConfig& cfg, double eps) {
    cfg.validate();
    const auto pset = cfg.make_potentials();
    const auto prof = solve_run_profile(cfg);
    const auto qbox = cfg.qbox();

    MultiplicityOutcome out;
    potentials::CriticalSearchOptions copt;
    copt.seeds_per_axis = cfg.seeds_per_axis;
    out.landscape = potentials::find_critical_points(
        pset, qbox, potentials::GammaSpec::general(cfg.p, cfg.dim), copt);

    if (out.landscape.degenerate_landscape) {
        out.seed_log.push_back("degenerate landscape: no isolated extrema, nothing to seed");
        return out;
    }

    std::vector<SolutionRecord> candidates;
    for (const auto& cp : out.landscape.critical_points) {
        if (cp.kind != potentials::CritKind::Min && cp.kind != potentials::CritKind::Max) continue;
        ++out.extrema_count;
        const auto mode = cp.kind == potentials::CritKind::Min ? reduce::OptimizeMode::Min
                                                               : reduce::OptimizeMode::Max;
        try {
            reduce::OptimizeOptions oopt;
            oopt.grad_tol = 2e-3;
            oopt.max_steps = 6;
            auto opt_res = reduce::optimize_reduced(pset, prof, cp.q, eps, cfg.beta, qbox, mode,
                                                    cfg.session_options(), oopt);
            auto sol = solve_at(cfg, opt_res.Qstar, eps);
            if (!sol.converged) {
                out.seed_log.push_back("seed at " + std::string(potentials::to_string(cp.kind)) +
                                       ": Newton did not converge");
                continue;
            }
            if (sol.collapsed) {
                out.seed_log.push_back("seed collapsed to the trivial/other branch");
                continue;
            }
            out.seed_log.push_back("seed ok: solution found");
            candidates.push_back(std::move(sol));
        } catch (const std::exception& e) {
            out.seed_log.push_back(std::string("seed failed: ") + e.what());
        }
    }

    const double dedup = 0.05 * qbox.diameter();
    for (auto& c : candidates) {
        bool duplicate = false;
        for (const auto& kept : out.solutions)
            if (c.peaks_valid && kept.peaks_valid && dist(c.Q_eps, kept.Q_eps) < dedup &&
                dist(c.Qprime_eps, kept.Qprime_eps) < dedup)
                duplicate = true;
        if (!duplicate) out.solutions.push_back(std::move(c));
    }
    return out;
}

}  // namespace cnls::driver

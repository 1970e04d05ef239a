// Command-line front end: profile, landscape, ansatz-check, reduce, solve,
// sweep and verify subcommands over a key = value run config.

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cnls/driver.hpp"
#include "cnls/verify.hpp"

namespace {

using namespace cnls;

struct CommonArgs {
    std::string config_path;
    std::vector<double> eps_override;
    double grid_h_override = 0.0;
    std::string out_override;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "run config file (key = value lines)");
    cmd->add_option("--eps", args.eps_override, "override the eps schedule")->delimiter(',');
    cmd->add_option("--grid-h", args.grid_h_override, "override the grid spacing");
    cmd->add_option("--out", args.out_override, "output directory");
}

driver::RunConfig load_config(const CommonArgs& args) {
    driver::RunConfig cfg = args.config_path.empty() ? driver::RunConfig::defaults(2)
                                                     : driver::parse_config_file(args.config_path);
    if (!args.eps_override.empty()) cfg.eps_list = args.eps_override;
    if (args.grid_h_override > 0.0) cfg.grid_h = args.grid_h_override;
    if (!args.out_override.empty()) cfg.out_dir = args.out_override;
    cfg.validate();
    return cfg;
}

std::shared_ptr<const profile::GroundStateProfile> run_profile(const driver::RunConfig& cfg) {
    return std::make_shared<profile::GroundStateProfile>(profile::solve_profile(cfg.dim, cfg.p));
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text << "\n";
}

int cmd_profile(const CommonArgs& args) {
    const auto cfg = load_config(args);
    std::filesystem::create_directories(cfg.out_dir);
    const auto prof = profile::solve_profile(cfg.dim, cfg.p);
    profile::save_table(prof, cfg.out_dir + "/profile.dat");

    nlohmann::ordered_json j;
    j["dim"] = prof.dim;
    j["p"] = prof.p;
    j["shoot_amplitude"] = prof.shoot_amplitude;
    j["residual_rms"] = prof.residual_rms;
    j["moment2"] = profile::moment(prof, 2.0);
    j["moment2p"] = profile::moment(prof, 2.0 * prof.p);
    if (cfg.p == 2.0) {
        const auto [paper, nehari] = profile::c0_candidates(prof);
        j["c0_half"] = paper;
        j["c0_nehari"] = nehari;
    }
    write_text(cfg.out_dir + "/profile.json", j.dump(2));
    std::printf("profile: W(0)=%.8f, table and moments written to %s\n", prof.shoot_amplitude,
                cfg.out_dir.c_str());
    return 0;
}

int cmd_landscape(const CommonArgs& args, bool classic) {
    const auto cfg = load_config(args);
    std::filesystem::create_directories(cfg.out_dir);
    const auto pset = cfg.make_potentials();

    const auto validation = potentials::validate_hypotheses(pset, cfg.qbox(), 17);
    if (!validation.pass) {
        std::printf("hypothesis validation FAILED:\n");
        for (const auto& v : validation.violations)
            std::printf("  %s: %s (value %.6g)\n", potentials::PotentialSet::name(v.which),
                        v.reason.c_str(), v.value);
        return 1;
    }

    const auto spec = classic ? potentials::GammaSpec::make_classic()
                              : potentials::GammaSpec::general(cfg.p, cfg.dim);
    potentials::CriticalSearchOptions copt;
    copt.seeds_per_axis = cfg.seeds_per_axis;
    const auto report = potentials::find_critical_points(pset, cfg.qbox(), spec, copt);
    write_text(cfg.out_dir + "/landscape.json", report.to_json());
    std::printf("landscape: %zu critical points (degenerate=%d), report in %s/landscape.json\n",
                report.critical_points.size(), report.degenerate_landscape ? 1 : 0,
                cfg.out_dir.c_str());
    return 0;
}

int cmd_ansatz_check(const CommonArgs& args) {
    const auto cfg = load_config(args);
    std::filesystem::create_directories(cfg.out_dir);
    const auto pset = cfg.make_potentials();
    const auto prof = run_profile(cfg);

    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (double eps : cfg.eps_list) {
        reduce::Session session(pset, prof, cfg.Q0, eps, cfg.beta, cfg.session_options());
        const auto& z = session.trial().fields;
        nlohmann::ordered_json j;
        j["eps"] = eps;
        j["grad_norm"] = field::norm(session.riesz_gradient(z));
        j["overlap"] = field::overlap(z, cfg.p);
        j["overlap_over_eps"] = field::overlap(z, cfg.p) / eps;
        j["peak_separation"] = session.trial().placement.peak_separation();
        j["max_u"] = *std::max_element(z.u.begin(), z.u.end());
        j["max_v"] = *std::max_element(z.v.begin(), z.v.end());
        const auto cut = ansatz::CutoffSpec::make(eps);
        j["cutoff_inner"] = cut.inner_radius;
        j["cutoff_outer"] = cut.outer_radius;
        j["cutoff_grad_bound"] = ansatz::cutoff_gradient_bound(cut);
        rows.push_back(std::move(j));
        field::save_snapshot(z, cfg.out_dir, "ansatz_eps" + std::to_string(eps), eps, cfg.beta, cfg.p,
                             cfg.potential_strings);
    }
    write_text(cfg.out_dir + "/ansatz_check.json", rows.dump(2));
    std::printf("ansatz-check: %zu rows written to %s/ansatz_check.json\n", rows.size(),
                cfg.out_dir.c_str());
    return 0;
}

int cmd_reduce(const CommonArgs& args, bool relinearize) {
    auto cfg = load_config(args);
    cfg.relinearize = false;
    std::filesystem::create_directories(cfg.out_dir);
    const auto pset = cfg.make_potentials();
    const auto prof = run_profile(cfg);

    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (double eps : cfg.eps_list) {
        reduce::Session session(pset, prof, cfg.Q0, eps, cfg.beta, cfg.session_options());
        const auto cr = session.corrector();
        const auto sample = session.reduced_energy(cr);
        nlohmann::ordered_json j;
        j["eps"] = eps;
        j["Q"] = cfg.Q0;
        j["A_value"] = sample.A_value;
        j["gamma_value"] = sample.gamma_value;
        j["disc_half"] = sample.disc_half;
        j["disc_nehari"] = sample.disc_nehari;
        j["w_norm"] = cr.w_norm;
        j["corrector_residual"] = cr.residual_norm;
        j["corrector_iterations"] = cr.iterations;
        j["contraction_ratios"] = cr.contraction_ratios;
        if (relinearize) {
            auto opt2 = cfg.session_options();
            opt2.relinearize = true;
            reduce::Session s2(pset, prof, cfg.Q0, eps, cfg.beta, opt2);
            const auto sample2 = s2.reduced_energy();
            j["A_value_relinearized"] = sample2.A_value;
        }
        rows.push_back(std::move(j));
    }
    write_text(cfg.out_dir + "/reduce.json", rows.dump(2));
    std::printf("reduce: %zu rows written to %s/reduce.json\n", rows.size(), cfg.out_dir.c_str());
    return 0;
}

int cmd_solve(const CommonArgs& args) {
    const auto cfg = load_config(args);
    std::filesystem::create_directories(cfg.out_dir);

    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (double eps : cfg.eps_list) {
        const auto sol = driver::solve_at(cfg, cfg.Q0, eps);
        nlohmann::ordered_json j;
        j["eps"] = eps;
        j["converged"] = sol.converged;
        j["collapsed"] = sol.collapsed;
        j["newton_iters"] = sol.newton_iters;
        j["final_grad_norm"] = sol.final_grad_norm;
        j["energy"] = sol.energy;
        j["min_field_value"] = sol.min_field_value;
        if (sol.peaks_valid) {
            j["Q_eps"] = sol.Q_eps;
            j["Qprime_eps"] = sol.Qprime_eps;
        }
        rows.push_back(std::move(j));
        field::save_snapshot(sol.fields, cfg.out_dir, "solution_eps" + std::to_string(eps), eps,
                             cfg.beta, cfg.p, cfg.potential_strings);
        std::printf("solve eps=%.4g: converged=%d grad=%.2e iters=%d\n", eps, sol.converged ? 1 : 0,
                    sol.final_grad_norm, sol.newton_iters);
    }
    write_text(cfg.out_dir + "/solve.json", rows.dump(2));
    return 0;
}

int cmd_sweep(const CommonArgs& args, bool with_solve) {
    auto cfg = load_config(args);
    if (with_solve) cfg.sweep_solve = true;
    const auto rec = driver::epsilon_sweep(cfg);
    driver::write_sweep_outputs(rec, cfg);
    std::printf("sweep: %zu rows; grad slope=%.3f, w slope=%.3f, overlap decreasing=%d, c*=%s\n",
                rec.rows.size(), rec.grad_slope.slope, rec.w_slope.slope,
                rec.overlap_strictly_decreasing ? 1 : 0, rec.c_winner.c_str());
    std::printf("outputs written to %s (results.json, sweep.csv, *.dat)\n", cfg.out_dir.c_str());
    return 0;
}

int cmd_verify(const CommonArgs& args, const std::vector<int>& subset) {
    const auto cfg = load_config(args);
    const auto results = driver::verify_suite(cfg, subset);
    driver::print_verify_table(results);
    return driver::verify_exit_code(results);
}

int cmd_multiplicity(const CommonArgs& args, double eps) {
    const auto cfg = load_config(args);
    std::filesystem::create_directories(cfg.out_dir);
    const auto outcome = driver::multiplicity_scan(cfg, eps);
    std::printf("multiplicity: %d extrema -> %zu deduplicated solutions\n", outcome.extrema_count,
                outcome.solutions.size());
    for (const auto& line : outcome.seed_log) std::printf("  %s\n", line.c_str());
    nlohmann::ordered_json j;
    j["extrema_count"] = outcome.extrema_count;
    j["landscape"] = nlohmann::ordered_json::parse(outcome.landscape.to_json());
    j["solutions"] = nlohmann::ordered_json::array();
    for (const auto& sol : outcome.solutions) {
        nlohmann::ordered_json s;
        s["Q_eps"] = sol.Q_eps;
        s["Qprime_eps"] = sol.Qprime_eps;
        s["energy"] = sol.energy;
        s["final_grad_norm"] = sol.final_grad_norm;
        j["solutions"].push_back(std::move(s));
    }
    write_text(cfg.out_dir + "/multiplicity.json", j.dump(2));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-peak concentration lab for coupled NLS systems"};
    app.require_subcommand(1);

    CommonArgs args;
    bool classic = false, with_solve = false, relinearize = false;
    double mult_eps = 0.01;
    std::vector<int> subset;

    auto* profile_cmd = app.add_subcommand("profile", "solve the ground-state profile, write table and moments");
    add_common(profile_cmd, args);

    auto* landscape_cmd = app.add_subcommand("landscape", "validate hypotheses and map the concentration landscape");
    add_common(landscape_cmd, args);
    landscape_cmd->add_flag("--classic", classic, "use the (p=2, N=3) landscape instead of the general one");

    auto* ansatz_cmd = app.add_subcommand("ansatz-check", "build the two-peak ansatz and report its diagnostics");
    add_common(ansatz_cmd, args);

    auto* reduce_cmd = app.add_subcommand("reduce", "corrector and reduced energy at Q0 for each eps");
    add_common(reduce_cmd, args);
    reduce_cmd->add_flag("--relinearize", relinearize, "also report the full-Newton corrector variant");

    auto* solve_cmd = app.add_subcommand("solve", "full Newton solve seeded by ansatz + corrector");
    add_common(solve_cmd, args);

    auto* sweep_cmd = app.add_subcommand("sweep", "eps sweep with slope fits; writes results.json and sweep.csv");
    add_common(sweep_cmd, args);
    sweep_cmd->add_flag("--solve", with_solve, "also run a full Newton solve per row");

    auto* mult_cmd = app.add_subcommand("multiplicity", "solutions from every landscape extremum");
    add_common(mult_cmd, args);
    mult_cmd->add_option("--at-eps", mult_eps, "eps for the scan");

    auto* verify_cmd = app.add_subcommand("verify", "run the acceptance suite; exit 0 iff all pass");
    add_common(verify_cmd, args);
    verify_cmd->add_option("--criterion", subset, "run only these criteria ids")->delimiter(',');

    CLI11_PARSE(app, argc, argv);

    try {
        if (profile_cmd->parsed()) return cmd_profile(args);
        if (landscape_cmd->parsed()) return cmd_landscape(args, classic);
        if (ansatz_cmd->parsed()) return cmd_ansatz_check(args);
        if (reduce_cmd->parsed()) return cmd_reduce(args, relinearize);
        if (solve_cmd->parsed()) return cmd_solve(args);
        if (sweep_cmd->parsed()) return cmd_sweep(args, with_solve);
        if (mult_cmd->parsed()) return cmd_multiplicity(args, mult_eps);
        if (verify_cmd->parsed()) return cmd_verify(args, subset);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}

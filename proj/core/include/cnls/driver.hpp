#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cnls/config.hpp"
#include "cnls/newton.hpp"
#include "cnls/potentials.hpp"
#include "cnls/reduction.hpp"

namespace cnls::driver {

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double half_width = 0.0;
    bool valid = false;
};

/// Least squares on (log eps, log value); requires >= 3 strictly positive values.
SlopeFit fit_slope(std::span<const std::pair<double, double>> pairs);

struct SweepRow {
    double eps = 0.0;
    double grad_ansatz_norm = 0.0;
    double overlap_over_eps = 0.0;
    double w_norm = 0.0;
    double corrector_residual = 0.0;
    int corrector_iterations = 0;
    double A_value = 0.0;
    double gamma_value = 0.0;
    double disc_half = 0.0;
    double disc_nehari = 0.0;
    bool reduced_valid = false;
    bool solved = false;
    std::vector<double> Q_eps, Qprime_eps;
    double peak_sep = 0.0;
    double peak_sep_over_eps = 0.0;
    double dist_to_Q0 = 0.0;
    double newton_grad_norm = 0.0;
    int newton_iters = 0;
    double min_field_value = 0.0;
    std::string failure;  // empty when the whole row is valid
};

struct SweepRecord {
    std::vector<SweepRow> rows;
    SlopeFit grad_slope, w_slope;
    bool overlap_strictly_decreasing = false;
    double overlap_last_over_first = 0.0;
    double c_half = 0.0, c_nehari = 0.0;
    std::string c_winner;  // candidate with the smaller discrepancy at the smallest eps
};

/// Runs ansatz diagnostics, corrector and reduced energy (optionally a full
/// solve) for every eps in the config and fits the asymptotic slopes.
SweepRecord epsilon_sweep(const RunConfig& cfg);

std::string sweep_to_json(const SweepRecord& rec, const RunConfig& cfg);
/// results.json, sweep.csv (stable column order) and per-quantity .dat files.
void write_sweep_outputs(const SweepRecord& rec, const RunConfig& cfg);

struct MultiplicityOutcome {
    potentials::LandscapeReport landscape;
    std::vector<SolutionRecord> solutions;  // deduplicated, converged
    std::vector<std::string> seed_log;      // one line per extremum seed
    int extrema_count = 0;
};

/// optimize_reduced then newton_solve from every landscape extremum;
/// solutions deduplicated by peak distance.
MultiplicityOutcome multiplicity_scan(const RunConfig& cfg, double eps);

/// Corrector + Newton at a fixed Q; the building block of `solve` and the
/// concentration checks.
SolutionRecord solve_at(const RunConfig& cfg, const std::vector<double>& Q, double eps,
                        bool extract = true);

}  // namespace cnls::driver

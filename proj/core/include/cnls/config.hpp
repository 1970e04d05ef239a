#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "cnls/potentials.hpp"
#include "cnls/reduction.hpp"

namespace cnls::driver {

/// Run parameters, read from a key = value config file. Defaults give the
/// N = 2 bump configuration every stock check uses.
struct RunConfig {
    int dim = 2;
    double p = 2.0;
    double beta = -0.5;
    std::array<std::string, 4> potential_strings;  // J1, J2, K1, K2
    std::vector<double> box_lo, box_hi;            // admissible Q box
    std::vector<double> eps_list{0.04, 0.02, 0.01, 0.005};
    std::vector<double> Q0;
    double grid_h = 0.25;
    double margin = 8.0;
    double bound_lower = 0.5;
    double bound_upper = 1e6;
    double tol_corrector = 1e-8;
    double tol_newton = 2e-3;  // the discrete two-peak residual floor scales like h^2
    double tol_linear = 1e-3;
    int max_corrector_iter = 40;
    int max_newton_iter = 60;
    int max_linear_iter = 3000;
    int seeds_per_axis = 5;
    std::uint64_t seed = 1234;
    std::size_t node_cap = 20'000'000;
    bool sweep_solve = false;   // run a full Newton solve per sweep row
    bool relinearize = false;   // corrector reports the full-Newton variant too
    std::string out_dir = "out";

    static RunConfig defaults(int dim = 2);

    void validate() const;
    potentials::PotentialSet make_potentials() const;
    potentials::Box qbox() const { return {box_lo, box_hi}; }
    reduce::SessionOptions session_options() const;
    std::string to_json() const;
};

/// key = value lines; '#' or ';' comments; lists comma-separated; strings
/// optionally double-quoted. Unknown keys are rejected.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);
void apply_override(RunConfig& cfg, const std::string& key, const std::string& value);

}  // namespace cnls::driver

#pragma once

#include <string>
#include <vector>

#include "cnls/config.hpp"

namespace cnls::driver {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string details;  // measured numbers vs thresholds
    double seconds = 0.0;
};

/// Runs the acceptance criteria (all of them, or the subset given), printing
/// one pass/fail line per criterion. Criteria pin their own parameters; the
/// config contributes only the output directory and RNG seed.
std::vector<CriterionResult> verify_suite(const RunConfig& cfg, std::vector<int> subset = {});

/// 0 iff every criterion passed.
int verify_exit_code(const std::vector<CriterionResult>& results);

void print_verify_table(const std::vector<CriterionResult>& results);

}  // namespace cnls::driver

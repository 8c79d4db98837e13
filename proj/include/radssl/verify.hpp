#pragma once

// Self-contained property suite for the divergence and loss code, run by the
// `verify` subcommand.

#include <cstdint>
#include <string>
#include <vector>

namespace radssl {

struct CheckResult {
    std::string name;
    bool passed = false;
    double max_deviation = 0.0;
    double tolerance = 0.0;
};

std::vector<CheckResult> run_verify_suite(std::uint64_t seed = 1, int trials = 1000);

}  // namespace radssl

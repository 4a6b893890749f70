#pragma once

#include <string>
#include <vector>

namespace eqe::cli {

struct CheckResult {
    std::string name;
    bool passed;
    double worst;      ///< largest observed error or statistic
    double tolerance;  ///< threshold `worst` is compared against
    std::string detail;
};

struct SelfcheckOptions {
    /// Test hook: forces the first check to run with a zero tolerance.
    bool inject_failure = false;
};

/// Oracle checks: PCF vs quadrature, closed forms, gradient identities,
/// chain rule, marginal normalization, sampler KS, fit round trip and
/// maximum-entropy dominance.
std::vector<CheckResult> run_selfcheck(const SelfcheckOptions& options = {});

}  // namespace eqe::cli

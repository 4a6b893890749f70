#pragma once

// JSON parameter files shared by every CLI command:
//   {"dim": 2, "param_form": "radial", "lambda1": 8, "lambda2": 4,
//    "mu": [0, 0], "sigma": [[1, 0], [0, 1]]}
// or the ring form with "alpha" and "R" instead of lambda1/lambda2.
// mu and sigma are optional (0 and I). Unknown keys are ignored, so the
// output of `eqe fit` is accepted as input.

#include <string>

#include "eqe/core.hpp"
#include "json.hpp"

namespace eqe::cli {

struct ParamsFile {
    EllipticalParams params;
    /// True when mu = 0 and Sigma = I (the file described a spherical law).
    bool spherical;
};

/// Throws DomainError on any schema or validation problem.
ParamsFile parse_params(const nlohmann::json& doc);
ParamsFile load_params(const std::string& path);

/// Radial form with explicit mu and sigma.
nlohmann::json params_to_json(const EllipticalParams& p);

}  // namespace eqe::cli

#pragma once

#include <Eigen/Dense>

#include "sparsepath/model.hpp"
#include "sparsepath/penalty.hpp"

namespace sparsepath {

struct CdOptions {
    double tol = 1e-8;       // max coordinate change per sweep
    int max_sweeps = 10000;
    double l_sep = 30.0;     // separation guard on the linear predictor
};

struct CdResult {
    Eigen::VectorXd beta;
    ActivePartition part;
    int sweeps = 0;
    bool converged = true;     // false when max_sweeps was exhausted
    std::vector<int> skipped;  // degenerate columns (curvature <= 1e-12)
};

// Cyclic coordinate descent on f(beta) + sum_{j in S} P(|beta_j|, rho) at
// fixed rho. Penalized coordinates are updated by the exact scalar
// thresholding operator of the local quadratic model; unpenalized
// coordinates take exact quadratic-model steps. For non-Gaussian losses the
// quadratic model is refreshed once per sweep (one Newton re-expansion).
// Degenerate coordinates (curvature <= 1e-12) are skipped.
// Throws SeparationError when the separation guard trips mid-solve.
CdResult cd_solve(const GlmProblem& prob, const Penalty& penalty, double rho,
                  const Eigen::VectorXd& beta_init, const CdOptions& opts = {});

}  // namespace sparsepath

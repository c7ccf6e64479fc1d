#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "sparsepath/cd.hpp"
#include "sparsepath/model.hpp"
#include "sparsepath/penalty.hpp"

namespace sparsepath {

// The moving point of the path follower: a stationarity point at rho with its
// active-set partition and the subgradient coefficients of the inactive
// penalized coordinates.
struct PathState {
    double rho = 0.0;
    Eigen::VectorXd beta;
    ActivePartition part;
    Eigen::VectorXd omega;  // over part.sz, same order; +-inf sentinel when dP/dt(0) = 0
};

enum class EventKind {
    Deactivate,
    Activate,
    Jump,
    HessianSingular,
    Separation,
    RankLimit,
    MaxPredictors,
    StepFailure,
};

std::string to_string(EventKind kind);

struct PathEvent {
    EventKind kind;
    double rho = 0.0;
    int index = -1;  // coordinate for Deactivate/Activate, else -1
    std::string detail;
};

// A sampled path point, stored sparsely (active coordinates only).
struct PathSample {
    double rho = 0.0;
    std::vector<std::pair<int, double>> nonzero;  // (column, beta) ascending
};

struct PathMeta {
    Loss loss = Loss::Gaussian;
    PenaltyFamily family = PenaltyFamily::Power;
    double eta = 1.0;
    int n = 0;
    int p = 0;
    double rho_max = 0.0;
    double rho_min = 0.0;
    int first_predictor = -1;  // j* determined at initialization
    std::string terminated_by;  // "rho_min", "rank_limit", "separation", "max_predictors", "step_failure"
};

struct SolutionPath {
    std::vector<PathSample> samples;  // rho strictly decreasing
    std::vector<PathEvent> events;
    PathMeta meta;

    Eigen::VectorXd beta_at(size_t sample_index) const;  // dense p-vector
};

struct PathOptions {
    double rtol = 1e-6;            // integrator relative tolerance
    double rho_min = -1.0;         // < 0: defaults to 1e-4 * rho_max
    int max_predictors = -1;       // < 0: unlimited (rank guard still applies)
    double jump_tol = 1e-6;        // post-CD displacement that records a Jump
    double event_tol = 1e-8;       // relative event localization tolerance in rho
    double tol_stat = 1e-4;        // stationarity budget for emitted states
    double l_sep = 30.0;           // separation guard on the linear predictor
    double max_step_fraction = 0.02;  // max step as a fraction of [rho_min, rho_max]
    int max_steps = 200000;
    CdOptions cd;
};

struct PathInit {
    PathState state;   // at rho_max: beta_S = 0, unpenalized block at its optimum
    double rho_max = 0.0;
    int first_predictor = -1;        // argmax of the entry points
    double rho_scale = 0.0;          // max_j a_j |b_j|, always finite
    bool rho_max_capped = false;     // true when no finite entry point exists
};

// Unpenalized-block fit (Newton to gradient norm <= 1e-10) and the entry
// point rho_max = max_j entry_rho of the coordinate-wise quadratic model.
// Throws SeparationError when the unpenalized fit diverges.
PathInit init_path(const GlmProblem& prob, const Penalty& penalty,
                   const PathOptions& opts = {});

// d beta_A / d rho = -H_A^{-1} u_A at the given state (ODE in increasing rho;
// the follower integrates with decreasing rho). Order matches
// prob.active_set(state.part). Throws SingularHessianError.
Eigen::VectorXd path_derivative(const GlmProblem& prob, const Penalty& penalty,
                                const PathState& state);

// Subgradient coefficient omega_j and the thresholding jump test for an
// inactive penalized coordinate j, from the diagonal quadratic model at the
// state. omega is +-inf when dP/dt at 0 is zero (the test is then
// thresholding only).
std::pair<double, bool> event_activation_check(const GlmProblem& prob, const Penalty& penalty,
                                               const PathState& state, int j);

// Max-norm residual of the stationarity condition at the state: active
// penalized |grad_j f + dP/dt sgn(beta_j)|, unpenalized |grad_j f|, inactive
// max(0, |grad_j f| - dP/dt(0)).
double stationarity_residual(const GlmProblem& prob, const Penalty& penalty,
                             const PathState& state);

// Rebuild the full PathState (partition + omega) for a stored sample.
PathState state_at(const GlmProblem& prob, const Penalty& penalty,
                   const SolutionPath& path, size_t sample_index);

// Algorithm: integrate the path ODE from rho_max toward rho_min with an
// embedded RK4(5) pair, localize the four event kinds by bisection on the
// dense output (trial states are Newton-polished onto the stationarity
// manifold), apply set updates for deactivation/activation, and recover by
// coordinate descent after jumps or Hessian singularities.
SolutionPath follow_path(const GlmProblem& prob, const Penalty& penalty,
                         const PathOptions& opts = {});

}  // namespace sparsepath

#pragma once

#include <string>
#include <vector>

#include "sparsepath/ebayes.hpp"
#include "sparsepath/model.hpp"
#include "sparsepath/path.hpp"
#include "sparsepath/penalty.hpp"

namespace sparsepath {

// Simulation study harness: iid standard-normal designs, true coefficients
// (+signal x n_pos, -signal x n_neg, 0 ...), responses drawn from the loss
// family, one path + selection per (replicate, eta).
struct SimConfig {
    Loss loss = Loss::Gaussian;
    PenaltyFamily family = PenaltyFamily::Power;
    std::vector<double> etas{0.5};
    int n = 200;
    int p = 10000;
    int replicates = 100;
    double signal = 3.0;
    int n_pos = 5;
    int n_neg = 5;
    double noise = 1.0;  // Gaussian sd
    std::uint64_t seed = 1;
    int max_predictors = 100;
    double rho_min = -1.0;
    double rtol = 1e-6;
    SelectionCriterion criterion = SelectionCriterion::EmpiricalBayes;
    int threads = 0;  // 0: min(hardware, SPARSEPATH_THREADS)
    bool intercept = true;
};

struct SimRecord {
    std::uint64_t seed = 0;  // per-replicate seed (config seed + replicate)
    Loss loss = Loss::Gaussian;
    double eta = 0.0;
    double runtime_s = 0.0;
    double fpr = 0.0;
    double fnr = 0.0;
    double mse = 0.0;
    std::string terminated_by;
};

// True coefficient vector of the study design.
Eigen::VectorXd sim_true_beta(const SimConfig& cfg);

// Generate one replicate's problem (design includes a leading unpenalized
// intercept column when cfg.intercept).
GlmProblem sim_problem(const SimConfig& cfg, std::uint64_t replicate_seed);

// Run all replicates (worker pool; rows ordered by replicate then eta).
std::vector<SimRecord> run_simulation(const SimConfig& cfg);

}  // namespace sparsepath

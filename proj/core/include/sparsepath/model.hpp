#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "sparsepath/penalty.hpp"

namespace sparsepath {

enum class Loss { Gaussian, Logistic, Poisson };

std::string to_string(Loss loss);

// Partition of the penalized set S into currently-nonzero (sz_bar) and zero
// (sz) indices. active = unpenalized ∪ sz_bar.
struct ActivePartition {
    std::vector<int> sz_bar;  // nonzero penalized
    std::vector<int> sz;      // zero penalized
};

// A GLM regression problem: design, response, loss family and the set of
// penalized columns. Losses use canonical links with constant terms dropped:
//   Gaussian  f = 0.5 ||y - X b||^2
//   Logistic  f = sum log(1 + exp(x_i' b)) - y_i x_i' b        (y in {0,1})
//   Poisson   f = sum exp(x_i' b) - y_i x_i' b                 (y in 0,1,2,...)
// Immutable after construction; all evaluations are const and thread-safe.
class GlmProblem {
public:
    GlmProblem(Eigen::MatrixXd design, Eigen::VectorXd response, Loss loss,
               std::vector<int> penalized);

    int n() const { return static_cast<int>(design_.rows()); }
    int p() const { return static_cast<int>(design_.cols()); }
    const Eigen::MatrixXd& design() const { return design_; }
    const Eigen::VectorXd& response() const { return response_; }
    Loss loss() const { return loss_; }
    const std::vector<int>& penalized() const { return penalized_; }
    const std::vector<int>& unpenalized() const { return unpenalized_; }
    bool is_penalized(int j) const { return penalized_mask_[static_cast<size_t>(j)]; }

    double loss_value(const Eigen::VectorXd& beta) const;
    Eigen::VectorXd loss_gradient(const Eigen::VectorXd& beta) const;

    // Per-observation curvature weights w_i of d2f = X' diag(w) X
    // (Gaussian 1, logistic mu(1-mu), Poisson mu).
    Eigen::VectorXd curvature_weights(const Eigen::VectorXd& beta) const;

    // d2f restricted to the given columns.
    Eigen::MatrixXd loss_hessian(const Eigen::VectorXd& beta,
                                 const std::vector<int>& cols) const;

    // Diagonal of d2f (all columns).
    Eigen::VectorXd loss_hessian_diagonal(const Eigen::VectorXd& beta) const;

    // Restricted Hessian of the penalized objective over the active set
    // (unpenalized first is NOT imposed; order follows part ordering:
    // unpenalized ∪ sz_bar, ascending). Penalized-active diagonal entries add
    // d2P/dt2 at |beta_j|. Every j in part.sz_bar must have beta_j != 0.
    Eigen::MatrixXd restricted_hessian(const Eigen::VectorXd& beta,
                                       const ActivePartition& part,
                                       const Penalty& penalty, double rho) const;

    // Active index list for a partition: unpenalized ∪ sz_bar, ascending.
    std::vector<int> active_set(const ActivePartition& part) const;

    // Column rank of the design (from the Gram matrix of the smaller side).
    // Computed on each call; callers on a hot path should cache it.
    int design_rank() const;

    // Linear-predictor guard for unbounded GLM likelihoods: true when
    // max_i |x_i' beta| > l_sep for logistic/Poisson. Always false for
    // Gaussian. (Heuristic; at |z| = 30 logistic probabilities are within
    // ~1e-13 of {0,1}.)
    bool detect_separation(const Eigen::VectorXd& beta, double l_sep = 30.0) const;

private:
    Eigen::MatrixXd design_;
    Eigen::VectorXd response_;
    Loss loss_;
    std::vector<int> penalized_;
    std::vector<int> unpenalized_;
    std::vector<bool> penalized_mask_;
};

// Column scales (and optional centers) used to put a design on a common
// scale before fitting and to map coefficients back afterwards.
struct Standardization {
    Eigen::VectorXd center;  // per-column subtracted value (0 if not centered)
    Eigen::VectorXd scale;   // per-column divisor (1 for untouched columns)
};

// Center and scale the given columns of X in place to zero mean and unit
// 1/n-variance. Constant columns are left unscaled. Only valid when an
// unpenalized intercept column absorbs the centering.
Standardization standardize_columns(Eigen::MatrixXd& x, const std::vector<int>& cols);

// Map coefficients fitted on the standardized design back to the original
// scale. intercept_col < 0 means there is no intercept column.
Eigen::VectorXd destandardize_beta(const Standardization& s, const Eigen::VectorXd& beta,
                                   int intercept_col);

}  // namespace sparsepath

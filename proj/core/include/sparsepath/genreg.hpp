#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <string>
#include <vector>

#include "sparsepath/model.hpp"

namespace sparsepath {

enum class RegMatrixKind { Fused, PolyTrend, CubicBinned, Custom };

// A full-row-rank regularization matrix V (r x p): the penalty is applied to
// the r linear forms V beta of one coefficient block.
struct RegMatrix {
    Eigen::SparseMatrix<double> v;
    RegMatrixKind kind = RegMatrixKind::Custom;
    int order = 0;  // d for PolyTrend

    int rows() const { return static_cast<int>(v.rows()); }
    int cols() const { return static_cast<int>(v.cols()); }
};

// First differences: (p-1) x p rows (-1, 1).
RegMatrix build_fused(int p);

// Order-d differences by the recursion V_d = V_1 V_{d-1}: (p-d) x p.
// Annihilates polynomial sequences of degree d-1.
RegMatrix build_polytrend(int p, int d);

// Cubic trend-filter matrix on binned coefficients: one leading and one
// trailing second-difference row (-1, 2, -1) and interior fourth-difference
// rows (1, -4, 6, -4, 1); shape (bins-2) x bins, bins >= 6. Its null space
// is the linear sequences, so the fully regularized fit is boundary-linear.
RegMatrix build_cubic_binned(int bins);

// Read a custom V from triplet CSV "i,j,v" (0-based, header line required).
RegMatrix read_reg_matrix_triplets(const std::string& path, int cols);

// One regularized block: rows [first, first + v.cols()) of beta get penalty
// terms P(|v_i' beta_block|, rho).
struct RegBlock {
    RegMatrix reg;
    int first = 0;
};

// The invertible completion V~ of the stacked per-block V, its factorization
// and the transformed design. gamma = V~ beta; the first r coordinates of
// gamma are exactly V beta and are the penalized set of the transformed
// problem.
class Reparameterization {
public:
    Reparameterization(const std::vector<RegBlock>& blocks, int p);

    int p() const { return static_cast<int>(v_tilde_.rows()); }
    int r() const { return r_; }
    const Eigen::MatrixXd& v_tilde() const { return v_tilde_; }

    Eigen::VectorXd to_gamma(const Eigen::VectorXd& beta) const;   // V~ beta
    Eigen::VectorXd back_transform(const Eigen::VectorXd& gamma) const;  // V~^{-1} gamma

    // X V~^{-1}, computed column-block-wise and held dense.
    Eigen::MatrixXd transform_design(const Eigen::MatrixXd& x) const;

private:
    Eigen::MatrixXd v_tilde_;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
    int r_ = 0;
};

struct TransformedProblem {
    GlmProblem problem;          // in gamma coordinates; S = {0..r-1}
    Reparameterization repar;
};

// Transform f(beta) + sum_blocks sum_i P(|v_i' beta|, rho) into the plain
// sparse-regression form in gamma = V~ beta. The transformed design must not
// be re-standardized. Throws RankDeficientError when the stacked V rows are
// dependent.
TransformedProblem reparameterize(const GlmProblem& prob, const std::vector<RegBlock>& blocks);

}  // namespace sparsepath

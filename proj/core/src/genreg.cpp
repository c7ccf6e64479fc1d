#include "sparsepath/genreg.hpp"

#include <fstream>
#include <sstream>

#include "sparsepath/errors.hpp"

namespace sparsepath {

namespace {

Eigen::SparseMatrix<double> first_difference(int p) {
    Eigen::SparseMatrix<double> d(p - 1, p);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(2 * (p - 1));
    for (int i = 0; i < p - 1; ++i) {
        trip.emplace_back(i, i, -1.0);
        trip.emplace_back(i, i + 1, 1.0);
    }
    d.setFromTriplets(trip.begin(), trip.end());
    return d;
}

}  // namespace

RegMatrix build_fused(int p) {
    if (p < 2) throw std::invalid_argument("build_fused: p must be >= 2");
    return {first_difference(p), RegMatrixKind::Fused, 1};
}

RegMatrix build_polytrend(int p, int d) {
    if (d < 1) throw std::invalid_argument("build_polytrend: d must be >= 1");
    if (p <= d) throw std::invalid_argument("build_polytrend: p must exceed d");
    Eigen::SparseMatrix<double> v = first_difference(p);
    for (int k = 2; k <= d; ++k) v = (first_difference(p - k + 1) * v).pruned();
    return {v, d == 1 ? RegMatrixKind::Fused : RegMatrixKind::PolyTrend, d};
}

RegMatrix build_cubic_binned(int bins) {
    if (bins < 6) throw std::invalid_argument("build_cubic_binned: bins must be >= 6");
    Eigen::SparseMatrix<double> v(bins - 2, bins);
    std::vector<Eigen::Triplet<double>> trip;
    const double second[] = {-1.0, 2.0, -1.0};
    const double fourth[] = {1.0, -4.0, 6.0, -4.0, 1.0};
    for (int c = 0; c < 3; ++c) trip.emplace_back(0, c, second[c]);
    for (int r = 1; r < bins - 3; ++r)
        for (int c = 0; c < 5; ++c) trip.emplace_back(r, r - 1 + c, fourth[c]);
    for (int c = 0; c < 3; ++c) trip.emplace_back(bins - 3, bins - 3 + c, second[c]);
    v.setFromTriplets(trip.begin(), trip.end());
    return {v, RegMatrixKind::CubicBinned, 4};
}

RegMatrix read_reg_matrix_triplets(const std::string& path, int cols) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open regularization matrix file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw InputError("empty regularization matrix file: " + path);
    std::vector<Eigen::Triplet<double>> trip;
    int max_row = -1;
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string cell;
        long vals_i = -1, vals_j = -1;
        double vals_v = 0.0;
        for (int c = 0; c < 3; ++c) {
            if (!std::getline(ss, cell, ',')) throw InputError("triplet row too short", lineno, c + 1);
            try {
                if (c == 0) vals_i = std::stol(cell);
                else if (c == 1) vals_j = std::stol(cell);
                else vals_v = std::stod(cell);
            } catch (const std::exception&) {
                throw InputError("non-numeric triplet cell", lineno, c + 1);
            }
        }
        if (vals_j < 0 || vals_j >= cols) throw InputError("triplet column out of range", lineno, 2);
        if (vals_i < 0) throw InputError("negative triplet row", lineno, 1);
        max_row = std::max(max_row, static_cast<int>(vals_i));
        trip.emplace_back(static_cast<int>(vals_i), static_cast<int>(vals_j), vals_v);
    }
    Eigen::SparseMatrix<double> v(max_row + 1, cols);
    v.setFromTriplets(trip.begin(), trip.end());
    return {v, RegMatrixKind::Custom, 0};
}

Reparameterization::Reparameterization(const std::vector<RegBlock>& blocks, int p) {
    int r = 0;
    for (const auto& b : blocks) {
        if (b.first < 0 || b.first + b.reg.cols() > p)
            throw std::invalid_argument("reparameterize: block exceeds coefficient range");
        r += b.reg.rows();
    }
    r_ = r;

    // stack the blocks into the top r rows of V~
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(r, p);
    int row = 0;
    for (const auto& b : blocks) {
        Eigen::MatrixXd dense = Eigen::MatrixXd(b.reg.v);
        v.block(row, b.first, dense.rows(), dense.cols()) = dense;
        row += static_cast<int>(dense.rows());
    }

    // orthonormal completion: the null space of V from a full QR of V'
    Eigen::MatrixXd vt = v.transpose();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(vt);
    if (qr.rank() < r) throw RankDeficientError("reparameterize: V rows are linearly dependent");
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(p, p);
    v_tilde_.resize(p, p);
    v_tilde_.topRows(r) = v;
    v_tilde_.bottomRows(p - r) = q.rightCols(p - r).transpose();
    lu_ = Eigen::PartialPivLU<Eigen::MatrixXd>(v_tilde_);
}

Eigen::VectorXd Reparameterization::to_gamma(const Eigen::VectorXd& beta) const {
    return v_tilde_ * beta;
}

Eigen::VectorXd Reparameterization::back_transform(const Eigen::VectorXd& gamma) const {
    return lu_.solve(gamma);
}

Eigen::MatrixXd Reparameterization::transform_design(const Eigen::MatrixXd& x) const {
    // X V~^{-1} = (V~^{-T} X')'
    return lu_.transpose().solve(x.transpose()).transpose();
}

TransformedProblem reparameterize(const GlmProblem& prob, const std::vector<RegBlock>& blocks) {
    Reparameterization repar(blocks, prob.p());
    Eigen::MatrixXd xg = repar.transform_design(prob.design());
    std::vector<int> penalized(repar.r());
    for (int j = 0; j < repar.r(); ++j) penalized[j] = j;
    GlmProblem gp(std::move(xg), prob.response(), prob.loss(), std::move(penalized));
    return {std::move(gp), std::move(repar)};
}

}  // namespace sparsepath

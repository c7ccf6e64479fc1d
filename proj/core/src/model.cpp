#include "sparsepath/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sparsepath {

namespace {

double softplus(double z) {
    // log(1 + exp(z)) without overflow
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double clamp_exp_arg(double z) { return std::min(z, 700.0); }

}  // namespace

std::string to_string(Loss loss) {
    switch (loss) {
        case Loss::Gaussian: return "gaussian";
        case Loss::Logistic: return "logistic";
        case Loss::Poisson: return "poisson";
    }
    return "?";
}

GlmProblem::GlmProblem(Eigen::MatrixXd design, Eigen::VectorXd response, Loss loss,
                       std::vector<int> penalized)
    : design_(std::move(design)), response_(std::move(response)), loss_(loss),
      penalized_(std::move(penalized)) {
    if (design_.rows() != response_.size())
        throw std::invalid_argument("GlmProblem: nrow(design) != length(response)");
    const int pp = p();
    penalized_mask_.assign(static_cast<size_t>(pp), false);
    std::sort(penalized_.begin(), penalized_.end());
    for (size_t k = 0; k < penalized_.size(); ++k) {
        int j = penalized_[k];
        if (j < 0 || j >= pp) throw std::invalid_argument("GlmProblem: penalized index out of range");
        if (k > 0 && penalized_[k - 1] == j)
            throw std::invalid_argument("GlmProblem: duplicate penalized index");
        penalized_mask_[static_cast<size_t>(j)] = true;
    }
    for (int j = 0; j < pp; ++j)
        if (!penalized_mask_[static_cast<size_t>(j)]) unpenalized_.push_back(j);
    if (loss_ == Loss::Logistic) {
        for (int i = 0; i < n(); ++i)
            if (response_[i] != 0.0 && response_[i] != 1.0)
                throw std::invalid_argument("GlmProblem: logistic responses must be 0/1");
    } else if (loss_ == Loss::Poisson) {
        for (int i = 0; i < n(); ++i)
            if (response_[i] < 0.0 || response_[i] != std::floor(response_[i]))
                throw std::invalid_argument("GlmProblem: Poisson responses must be nonnegative integers");
    }
}

double GlmProblem::loss_value(const Eigen::VectorXd& beta) const {
    Eigen::VectorXd z = design_ * beta;
    switch (loss_) {
        case Loss::Gaussian:
            return 0.5 * (response_ - z).squaredNorm();
        case Loss::Logistic: {
            double f = 0.0;
            for (int i = 0; i < n(); ++i) f += softplus(z[i]) - response_[i] * z[i];
            return f;
        }
        case Loss::Poisson: {
            double f = 0.0;
            for (int i = 0; i < n(); ++i) f += std::exp(clamp_exp_arg(z[i])) - response_[i] * z[i];
            return f;
        }
    }
    return 0.0;
}

Eigen::VectorXd GlmProblem::loss_gradient(const Eigen::VectorXd& beta) const {
    Eigen::VectorXd z = design_ * beta;
    Eigen::VectorXd mu(n());
    switch (loss_) {
        case Loss::Gaussian:
            mu = z;
            break;
        case Loss::Logistic:
            for (int i = 0; i < n(); ++i) mu[i] = 1.0 / (1.0 + std::exp(-z[i]));
            break;
        case Loss::Poisson:
            for (int i = 0; i < n(); ++i) mu[i] = std::exp(clamp_exp_arg(z[i]));
            break;
    }
    return design_.transpose() * (mu - response_);
}

Eigen::VectorXd GlmProblem::curvature_weights(const Eigen::VectorXd& beta) const {
    Eigen::VectorXd w(n());
    switch (loss_) {
        case Loss::Gaussian:
            w.setOnes();
            break;
        case Loss::Logistic: {
            Eigen::VectorXd z = design_ * beta;
            for (int i = 0; i < n(); ++i) {
                double mu = 1.0 / (1.0 + std::exp(-z[i]));
                w[i] = mu * (1.0 - mu);
            }
            break;
        }
        case Loss::Poisson: {
            Eigen::VectorXd z = design_ * beta;
            for (int i = 0; i < n(); ++i) w[i] = std::exp(clamp_exp_arg(z[i]));
            break;
        }
    }
    return w;
}

Eigen::MatrixXd GlmProblem::loss_hessian(const Eigen::VectorXd& beta,
                                         const std::vector<int>& cols) const {
    const int k = static_cast<int>(cols.size());
    Eigen::MatrixXd xa(n(), k);
    for (int c = 0; c < k; ++c) xa.col(c) = design_.col(cols[static_cast<size_t>(c)]);
    if (loss_ == Loss::Gaussian) return xa.transpose() * xa;
    Eigen::VectorXd w = curvature_weights(beta);
    return xa.transpose() * w.asDiagonal() * xa;
}

Eigen::VectorXd GlmProblem::loss_hessian_diagonal(const Eigen::VectorXd& beta) const {
    if (loss_ == Loss::Gaussian) return design_.colwise().squaredNorm();
    Eigen::VectorXd w = curvature_weights(beta);
    return (design_.array().square().colwise() * w.array()).colwise().sum();
}

std::vector<int> GlmProblem::active_set(const ActivePartition& part) const {
    std::vector<int> active = unpenalized_;
    active.insert(active.end(), part.sz_bar.begin(), part.sz_bar.end());
    std::sort(active.begin(), active.end());
    return active;
}

Eigen::MatrixXd GlmProblem::restricted_hessian(const Eigen::VectorXd& beta,
                                               const ActivePartition& part,
                                               const Penalty& penalty, double rho) const {
    std::vector<int> active = active_set(part);
    Eigen::MatrixXd h = loss_hessian(beta, active);
    for (size_t k = 0; k < active.size(); ++k) {
        int j = active[k];
        if (is_penalized(j))
            h(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) +=
                penalty.d2_tt(std::abs(beta[j]), rho);
    }
    return h;
}

int GlmProblem::design_rank() const {
    Eigen::MatrixXd gram = (n() <= p()) ? Eigen::MatrixXd(design_ * design_.transpose())
                                        : Eigen::MatrixXd(design_.transpose() * design_);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
    double lmax = std::max(es.eigenvalues().maxCoeff(), 0.0);
    double tol = 1e-12 * std::max(lmax, 1.0) * gram.rows();
    int r = 0;
    for (int i = 0; i < es.eigenvalues().size(); ++i)
        if (es.eigenvalues()[i] > tol) ++r;
    return r;
}

bool GlmProblem::detect_separation(const Eigen::VectorXd& beta, double l_sep) const {
    if (loss_ == Loss::Gaussian) return false;
    Eigen::VectorXd z = design_ * beta;
    return z.cwiseAbs().maxCoeff() > l_sep;
}

Standardization standardize_columns(Eigen::MatrixXd& x, const std::vector<int>& cols) {
    const int n = static_cast<int>(x.rows());
    Standardization s;
    s.center = Eigen::VectorXd::Zero(x.cols());
    s.scale = Eigen::VectorXd::Ones(x.cols());
    for (int j : cols) {
        double m = x.col(j).mean();
        x.col(j).array() -= m;
        double sd = std::sqrt(x.col(j).squaredNorm() / n);
        s.center[j] = m;
        if (sd > 0.0) {
            x.col(j) /= sd;
            s.scale[j] = sd;
        }
    }
    return s;
}

Eigen::VectorXd destandardize_beta(const Standardization& s, const Eigen::VectorXd& beta,
                                   int intercept_col) {
    Eigen::VectorXd out = beta.cwiseQuotient(s.scale);
    if (intercept_col >= 0) {
        double shift = 0.0;
        for (int j = 0; j < beta.size(); ++j)
            if (j != intercept_col) shift += s.center[j] * out[j];
        out[intercept_col] -= shift;
    }
    return out;
}

}  // namespace sparsepath

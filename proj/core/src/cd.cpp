#include "sparsepath/cd.hpp"

#include <cmath>

#include "sparsepath/errors.hpp"

namespace sparsepath {

// One sweep updates every coordinate against a quadratic model of f built at
// the sweep's start (exact for Gaussian loss, one Newton re-expansion per
// sweep otherwise). s = W (z_work - X beta) is maintained so that the model
// gradient is -x_j' s; for Gaussian it is the plain residual y - X beta.
CdResult cd_solve(const GlmProblem& prob, const Penalty& penalty, double rho,
                  const Eigen::VectorXd& beta_init, const CdOptions& opts) {
    const auto& x = prob.design();
    const int n = prob.n();
    const int p = prob.p();
    if (beta_init.size() != p) throw std::invalid_argument("cd_solve: beta_init has wrong size");

    const bool gaussian = prob.loss() == Loss::Gaussian;
    Eigen::VectorXd beta = beta_init;
    Eigen::VectorXd a_gauss, s, w, a;
    if (gaussian) {
        a_gauss = x.colwise().squaredNorm();
        s = prob.response() - x * beta;
    }

    CdResult res;
    for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
        if (!gaussian) {
            Eigen::VectorXd z = x * beta;
            if (z.cwiseAbs().maxCoeff() > opts.l_sep)
                throw SeparationError("cd_solve: separation guard tripped");
            Eigen::VectorXd mu(n);
            w.resize(n);
            if (prob.loss() == Loss::Logistic) {
                for (int i = 0; i < n; ++i) {
                    mu[i] = 1.0 / (1.0 + std::exp(-z[i]));
                    w[i] = mu[i] * (1.0 - mu[i]);
                }
            } else {
                for (int i = 0; i < n; ++i) {
                    mu[i] = std::exp(z[i]);
                    w[i] = mu[i];
                }
            }
            s = prob.response() - mu;
            a = (x.array().square().colwise() * w.array()).colwise().sum();
        }

        double max_change = 0.0;
        for (int j = 0; j < p; ++j) {
            double aj = gaussian ? a_gauss[j] : a[j];
            if (aj <= 1e-12) {
                if (sweep == 0) res.skipped.push_back(j);
                continue;
            }
            double bj = beta[j] + x.col(j).dot(s) / aj;
            double newb = prob.is_penalized(j) ? penalty.threshold({aj, bj}, rho) : bj;
            double change = newb - beta[j];
            if (change != 0.0) {
                if (gaussian)
                    s -= x.col(j) * change;
                else
                    s -= (w.array() * x.col(j).array()).matrix() * change;
                beta[j] = newb;
                max_change = std::max(max_change, std::abs(change));
            }
        }
        res.sweeps = sweep + 1;
        res.converged = max_change <= opts.tol;
        if (res.converged) break;
    }

    if (!gaussian && prob.detect_separation(beta, opts.l_sep))
        throw SeparationError("cd_solve: separation at solution");

    res.beta = std::move(beta);
    for (int j : prob.penalized()) {
        if (res.beta[j] != 0.0)
            res.part.sz_bar.push_back(j);
        else
            res.part.sz.push_back(j);
    }
    return res;
}

}  // namespace sparsepath

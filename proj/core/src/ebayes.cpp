#include "sparsepath/ebayes.hpp"

#include <cmath>
#include <limits>

#include "sparsepath/errors.hpp"

namespace sparsepath {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct HessianLogDet {
    bool ok = false;
    bool indefinite = false;
    double value = 0.0;
};

HessianLogDet half_logdet(const GlmProblem& prob, const Penalty& penalty,
                          const PathState& state) {
    HessianLogDet out;
    std::vector<int> active = prob.active_set(state.part);
    if (active.empty()) {
        out.ok = true;
        return out;
    }
    Eigen::MatrixXd h = prob.restricted_hessian(state.beta, state.part, penalty, state.rho);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h, Eigen::EigenvaluesOnly);
    double tol = 1e-12 * (1.0 + h.diagonal().cwiseAbs().maxCoeff());
    double acc = 0.0;
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
        double lam = es.eigenvalues()[i];
        if (lam <= tol) {
            out.indefinite = lam < -tol;
            return out;
        }
        acc += std::log(lam);
    }
    out.ok = true;
    out.value = 0.5 * acc;
    return out;
}

double penalized_term(const GlmProblem& prob, const Penalty& penalty, const PathState& state) {
    double acc = 0.0;
    for (int j : state.part.sz_bar) acc += penalty.value(std::abs(state.beta[j]), state.rho);
    return acc;
}

EbScore base_score(const Penalty& penalty, const PathState& state, const GlmProblem& prob) {
    EbScore s;
    s.rho = state.rho;
    s.eta = penalty.eta();
    s.q = static_cast<int>(prob.active_set(state.part).size());
    return s;
}

EbScore inadmissible(EbScore s, EbFlag flag) {
    s.flag = flag;
    s.criterion = kInf;
    return s;
}

// Golden-section minimization of a unimodal function on [lo, hi].
std::pair<double, bool> golden_min(double lo, double hi, const auto& f, double rel_tol) {
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double c = b - gr * (b - a);
    double d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 400 && (b - a) > rel_tol * (std::abs(a) + std::abs(b)); ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    double x = 0.5 * (a + b);
    bool interior = (x > lo * (1.0 + 1e-6) && x < hi * (1.0 - 1e-6));
    return {x, interior};
}

}  // namespace

std::string to_string(SelectionCriterion c) {
    switch (c) {
        case SelectionCriterion::EmpiricalBayes: return "eb";
        case SelectionCriterion::Aic: return "aic";
        case SelectionCriterion::Bic: return "bic";
    }
    return "?";
}

EbScore eb_log_glm(const GlmProblem& prob, const Penalty& penalty, const PathState& state) {
    EbScore s = base_score(penalty, state, prob);
    const double rho = state.rho, eta = penalty.eta();
    if (!(rho > 1.0)) return inadmissible(s, EbFlag::RhoOutOfRange);
    HessianLogDet ld = half_logdet(prob, penalty, state);
    if (!ld.ok)
        return inadmissible(s, ld.indefinite ? EbFlag::IndefiniteHessian : EbFlag::SingularHessian);
    double h = prob.loss_value(state.beta) + penalized_term(prob, penalty, state);
    s.normalization =
        -s.q * std::log(std::sqrt(M_PI / 2.0) * (rho - 1.0) * std::pow(eta, rho - 1.0));
    s.fit = h;
    s.half_logdet = ld.value;
    s.criterion = s.normalization + s.fit + s.half_logdet;
    return s;
}

EbScore eb_log_linear(const GlmProblem& prob, const Penalty& penalty, const PathState& state) {
    if (prob.loss() != Loss::Gaussian)
        throw std::invalid_argument("eb_log_linear: Gaussian loss required");
    EbScore s = base_score(penalty, state, prob);
    const double rho = state.rho, eta = penalty.eta();
    const double n = prob.n(), q = s.q;
    HessianLogDet ld = half_logdet(prob, penalty, state);
    if (!ld.ok)
        return inadmissible(s, ld.indefinite ? EbFlag::IndefiniteHessian : EbFlag::SingularHessian);
    double h = prob.loss_value(state.beta) + penalized_term(prob, penalty, state);

    // minimize the sigma^2-dependent part of the negative log marginal:
    // (n-q)/2 ln s2 - q rho ln(eta)/s2 - q ln(rho/s2 - 1) + h/s2, s2 < rho
    auto g = [&](double s2) {
        double val = 0.5 * (n - q) * std::log(s2) + h / s2;
        if (q > 0) val += -q * rho * std::log(eta) / s2 - q * std::log(rho / s2 - 1.0);
        return val;
    };
    double hi = (q > 0) ? rho * (1.0 - 1e-12) : 1e8;
    hi = std::min(hi, 1e8);
    if (hi <= 2e-8) return inadmissible(s, EbFlag::RhoOutOfRange);
    auto [s2, interior] = golden_min(1e-8, hi, g, 1e-10);
    if (!interior) s.flag = EbFlag::NonInteriorSigma;
    s.sigma2 = s2;

    s.normalization = 0.5 * (n - q) * std::log(2.0 * M_PI * s2) + q * std::log(2.0);
    if (q > 0)
        s.normalization +=
            -q * (rho / s2 - 1.0) * std::log(eta) - q * std::log(rho / s2 - 1.0);
    s.fit = h / s2;
    s.half_logdet = ld.value;
    s.criterion = s.normalization + s.fit + s.half_logdet;
    if (!std::isfinite(s.criterion)) return inadmissible(s, EbFlag::RhoOutOfRange);
    return s;
}

EbScore eb_power_glm(const GlmProblem& prob, const Penalty& penalty, const PathState& state) {
    EbScore s = base_score(penalty, state, prob);
    const double rho = state.rho, eta = penalty.eta();
    HessianLogDet ld = half_logdet(prob, penalty, state);
    if (!ld.ok)
        return inadmissible(s, ld.indefinite ? EbFlag::IndefiniteHessian : EbFlag::SingularHessian);
    double h = prob.loss_value(state.beta) + penalized_term(prob, penalty, state);
    s.normalization = -s.q * (std::log(std::sqrt(M_PI) * eta / std::sqrt(2.0)) +
                              std::log(rho) / eta - std::lgamma(1.0 / eta));
    s.fit = h;
    s.half_logdet = ld.value;
    s.criterion = s.normalization + s.fit + s.half_logdet;
    return s;
}

EbScore eb_power_linear(const GlmProblem& prob, const Penalty& penalty, const PathState& state) {
    if (prob.loss() != Loss::Gaussian)
        throw std::invalid_argument("eb_power_linear: Gaussian loss required");
    EbScore s = base_score(penalty, state, prob);
    const double rho = state.rho, eta = penalty.eta();
    const double n = prob.n(), q = s.q;
    HessianLogDet ld = half_logdet(prob, penalty, state);
    if (!ld.ok)
        return inadmissible(s, ld.indefinite ? EbFlag::IndefiniteHessian : EbFlag::SingularHessian);
    double h = prob.loss_value(state.beta) + penalized_term(prob, penalty, state);
    double dof = 0.5 * (n - q) + q / eta;
    if (!(h > 0.0)) return inadmissible(s, EbFlag::PerfectFit);
    if (!(dof > 0.0)) return inadmissible(s, EbFlag::PerfectFit);
    double s2 = h / dof;
    s.sigma2 = s2;
    s.normalization = -q * (std::log(std::sqrt(M_PI) * eta / std::sqrt(2.0)) +
                            std::log(rho) / eta - std::lgamma(1.0 / eta));
    s.fit = dof * (1.0 + std::log(s2));
    s.half_logdet = ld.value;
    s.criterion = s.normalization + s.fit + s.half_logdet;
    return s;
}

namespace {

EbScore score_state(const GlmProblem& prob, const Penalty& penalty, const PathState& state,
                    SelectionCriterion criterion) {
    if (criterion == SelectionCriterion::EmpiricalBayes) {
        switch (penalty.family()) {
            case PenaltyFamily::Log:
                return prob.loss() == Loss::Gaussian ? eb_log_linear(prob, penalty, state)
                                                     : eb_log_glm(prob, penalty, state);
            case PenaltyFamily::Power:
                return prob.loss() == Loss::Gaussian ? eb_power_linear(prob, penalty, state)
                                                     : eb_power_glm(prob, penalty, state);
            default:
                throw std::invalid_argument(
                    "select_model: no proper-prior empirical Bayes criterion for family '" +
                    to_string(penalty.family()) + "'; pass aic or bic explicitly");
        }
    }
    // AIC/BIC-style plug-in scores (not Bayesian; q counts active coefficients)
    EbScore s;
    s.rho = state.rho;
    s.eta = penalty.eta();
    s.q = static_cast<int>(prob.active_set(state.part).size());
    double complexity = (criterion == SelectionCriterion::Aic)
                            ? 2.0 * s.q
                            : s.q * std::log(static_cast<double>(prob.n()));
    if (prob.loss() == Loss::Gaussian) {
        double rss = 2.0 * prob.loss_value(state.beta);
        if (rss <= 0.0) return inadmissible(s, EbFlag::PerfectFit);
        s.fit = prob.n() * std::log(rss / prob.n());
        s.sigma2 = rss / prob.n();
    } else {
        s.fit = 2.0 * prob.loss_value(state.beta);
    }
    s.normalization = complexity;
    s.criterion = s.fit + complexity;
    return s;
}

}  // namespace

SelectionResult select_model(const GlmProblem& prob,
                             const std::vector<std::pair<Penalty, const SolutionPath*>>& paths,
                             SelectionCriterion criterion) {
    SelectionResult out;
    bool found = false;
    for (size_t k = 0; k < paths.size(); ++k) {
        const auto& [penalty, path] = paths[k];
        std::vector<EbScore> scores;
        scores.reserve(path->samples.size());
        for (size_t i = 0; i < path->samples.size(); ++i) {
            PathState st = state_at(prob, penalty, *path, i);
            EbScore s = score_state(prob, penalty, st, criterion);
            if (std::isfinite(s.criterion) &&
                (!found || s.criterion < out.best.criterion)) {
                out.best = s;
                out.path_index = k;
                out.sample_index = i;
                found = true;
            }
            scores.push_back(std::move(s));
        }
        out.scores.push_back(std::move(scores));
    }
    if (!found) throw AllInadmissibleError("select_model: every sampled state scored +inf");
    return out;
}

SelectionResult select_model(const GlmProblem& prob, const Penalty& penalty,
                             const SolutionPath& path, SelectionCriterion criterion) {
    return select_model(prob, {{penalty, &path}}, criterion);
}

}  // namespace sparsepath

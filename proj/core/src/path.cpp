#include "sparsepath/path.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sparsepath/errors.hpp"

namespace sparsepath {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// ---------------------------------------------------------------------------
// Segment: the fixed-active-set machinery between two set-change events.
// Holds copies of the active columns, the Gaussian Gram cache, and tracked
// signs for penalized-active coordinates (well-defined even while a freshly
// activated coordinate still sits at 0).
// ---------------------------------------------------------------------------
struct Segment {
    const GlmProblem& prob;
    const Penalty& pen;
    std::vector<int> active;        // sorted: unpenalized ∪ sz_bar
    std::vector<int> sz;            // sorted: inactive penalized
    std::vector<double> sign;       // size p; 0 for inactive/unpenalized
    Eigen::MatrixXd xa;             // n x m active columns
    Eigen::MatrixXd gram;           // xa' xa (Gaussian only)
    Eigen::VectorXd xty;            // xa' y  (Gaussian only)
    double sing_tol_rel = 1e-8;

    Segment(const GlmProblem& p_, const Penalty& pen_) : prob(p_), pen(pen_) {}

    void rebuild(const Eigen::VectorXd& beta, const ActivePartition& part,
                 const std::vector<double>& signs) {
        sign = signs;
        active = prob.active_set(part);
        sz = part.sz;
        std::sort(sz.begin(), sz.end());
        const int m = static_cast<int>(active.size());
        xa.resize(prob.n(), m);
        for (int k = 0; k < m; ++k) xa.col(k) = prob.design().col(active[k]);
        if (prob.loss() == Loss::Gaussian) {
            gram = xa.transpose() * xa;
            xty = xa.transpose() * prob.response();
        }
        (void)beta;
    }

    int m() const { return static_cast<int>(active.size()); }

    Eigen::VectorXd pack(const Eigen::VectorXd& beta) const {
        Eigen::VectorXd ya(m());
        for (int k = 0; k < m(); ++k) ya[k] = beta[active[k]];
        return ya;
    }

    void unpack(const Eigen::VectorXd& ya, Eigen::VectorXd& beta) const {
        for (int k = 0; k < m(); ++k) beta[active[k]] = ya[k];
    }

    // gradient of f over the active coordinates
    Eigen::VectorXd grad_active(const Eigen::VectorXd& ya) const {
        if (prob.loss() == Loss::Gaussian) return gram * ya - xty;
        Eigen::VectorXd z = xa * ya;
        Eigen::VectorXd mu(z.size());
        if (prob.loss() == Loss::Logistic)
            for (int i = 0; i < z.size(); ++i) mu[i] = 1.0 / (1.0 + std::exp(-z[i]));
        else
            for (int i = 0; i < z.size(); ++i) mu[i] = std::exp(std::min(z[i], 700.0));
        return xa.transpose() * (mu - prob.response());
    }

    Eigen::MatrixXd hessian(const Eigen::VectorXd& ya, double rho) const {
        Eigen::MatrixXd h;
        if (prob.loss() == Loss::Gaussian) {
            h = gram;
        } else {
            Eigen::VectorXd z = xa * ya;
            Eigen::VectorXd w(z.size());
            if (prob.loss() == Loss::Logistic) {
                for (int i = 0; i < z.size(); ++i) {
                    double mu = 1.0 / (1.0 + std::exp(-z[i]));
                    w[i] = mu * (1.0 - mu);
                }
            } else {
                for (int i = 0; i < z.size(); ++i) w[i] = std::exp(std::min(z[i], 700.0));
            }
            h = xa.transpose() * w.asDiagonal() * xa;
        }
        for (int k = 0; k < m(); ++k) {
            int j = active[k];
            if (prob.is_penalized(j)) h(k, k) += pen.d2_tt(std::abs(ya[k]), rho);
        }
        return h;
    }

    // min-pivot margin of H_A; <= 0 means singular under the scale-invariant
    // tolerance. Also used as the event-(4) function.
    double pivot_margin(const Eigen::VectorXd& ya, double rho) const {
        if (m() == 0) return 1.0;
        Eigen::MatrixXd h = hessian(ya, rho);
        Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
        double tol = sing_tol_rel * (1.0 + h.diagonal().maxCoeff());
        if (ldlt.info() != Eigen::Success) return -tol;
        return ldlt.vectorD().minCoeff() - tol;
    }

    // dy/drho = -H^{-1} u (ODE in increasing rho)
    Eigen::VectorXd derivative(const Eigen::VectorXd& ya, double rho) const {
        if (m() == 0) return Eigen::VectorXd();
        Eigen::MatrixXd h = hessian(ya, rho);
        Eigen::VectorXd u = Eigen::VectorXd::Zero(m());
        for (int k = 0; k < m(); ++k) {
            int j = active[k];
            if (prob.is_penalized(j))
                u[k] = pen.d2_trho(std::abs(ya[k]), rho) * sign[j];
        }
        Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
        double tol = sing_tol_rel * (1.0 + h.diagonal().maxCoeff());
        if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= tol)
            throw SingularHessianError("path: restricted Hessian singular");
        return -ldlt.solve(u);
    }

    // Stationarity system over the active set (signs fixed by the segment).
    Eigen::VectorXd stationarity_vec(const Eigen::VectorXd& ya, double rho) const {
        Eigen::VectorXd k = grad_active(ya);
        for (int c = 0; c < m(); ++c) {
            int j = active[c];
            if (prob.is_penalized(j)) k[c] += pen.d1(std::abs(ya[c]), rho) * sign[j];
        }
        return k;
    }

    // Newton projection onto the stationarity manifold at fixed rho.
    // Rejected (returns false, ya untouched) on sign flips or singular H.
    bool polish(Eigen::VectorXd& ya, double rho) const {
        if (m() == 0) return true;
        Eigen::VectorXd y = ya;
        for (int it = 0; it < 4; ++it) {
            Eigen::VectorXd k = stationarity_vec(y, rho);
            double scale = 1.0 + k.cwiseAbs().maxCoeff();
            if (k.cwiseAbs().maxCoeff() <= 1e-12 * scale) break;
            Eigen::MatrixXd h = hessian(y, rho);
            Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
            if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 0.0) return false;
            Eigen::VectorXd delta = ldlt.solve(k);
            y -= delta;
            if (delta.cwiseAbs().maxCoeff() <= 1e-13 * (1.0 + y.cwiseAbs().maxCoeff())) break;
        }
        for (int c = 0; c < m(); ++c) {
            int j = active[c];
            if (prob.is_penalized(j) && y[c] * sign[j] < 0.0) return false;
        }
        Eigen::VectorXd k0 = stationarity_vec(ya, rho);
        Eigen::VectorXd k1 = stationarity_vec(y, rho);
        if (k1.cwiseAbs().maxCoeff() > k0.cwiseAbs().maxCoeff()) return false;
        ya = y;
        return true;
    }
};

// Gradient and loss-Hessian diagonal over all p columns (for the inactive
// coordinate checks). O(np).
struct FullView {
    Eigen::VectorXd grad;
    Eigen::VectorXd hdiag;
    double max_abs_z = 0.0;
};

FullView full_view(const GlmProblem& prob, const Segment& seg, const Eigen::VectorXd& ya,
                   const Eigen::VectorXd& gauss_col_sq) {
    FullView v;
    Eigen::VectorXd z = seg.xa * ya;
    v.max_abs_z = (z.size() > 0) ? z.cwiseAbs().maxCoeff() : 0.0;
    if (prob.loss() == Loss::Gaussian) {
        v.grad = prob.design().transpose() * (z - prob.response());
        v.hdiag = gauss_col_sq;
        return v;
    }
    Eigen::VectorXd mu(z.size()), w(z.size());
    if (prob.loss() == Loss::Logistic) {
        for (int i = 0; i < z.size(); ++i) {
            mu[i] = 1.0 / (1.0 + std::exp(-z[i]));
            w[i] = mu[i] * (1.0 - mu[i]);
        }
    } else {
        for (int i = 0; i < z.size(); ++i) {
            mu[i] = std::exp(std::min(z[i], 700.0));
            w[i] = mu[i];
        }
    }
    v.grad = prob.design().transpose() * (mu - prob.response());
    v.hdiag = (prob.design().array().square().colwise() * w.array()).colwise().sum();
    return v;
}

// Dormand-Prince 5(4) coefficients.
namespace dp {
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                 e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                 e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;
}  // namespace dp

struct StepAttempt {
    bool singular = false;  // derivative threw inside the step
    double err = 0.0;
    Eigen::VectorXd y1;
    Eigen::VectorXd f1;  // derivative at (rho+h, y1)
};

StepAttempt rk45_step(const Segment& seg, double rho, const Eigen::VectorXd& y0,
                      const Eigen::VectorXd& f0, double h, double rtol) {
    StepAttempt out;
    using dp::a21, dp::a31, dp::a32, dp::a41, dp::a42, dp::a43, dp::a51, dp::a52, dp::a53,
        dp::a54, dp::a61, dp::a62, dp::a63, dp::a64, dp::a65;
    try {
        Eigen::VectorXd k1 = f0;
        Eigen::VectorXd k2 = seg.derivative(y0 + h * a21 * k1, rho + dp::c2 * h);
        Eigen::VectorXd k3 = seg.derivative(y0 + h * (a31 * k1 + a32 * k2), rho + dp::c3 * h);
        Eigen::VectorXd k4 =
            seg.derivative(y0 + h * (a41 * k1 + a42 * k2 + a43 * k3), rho + dp::c4 * h);
        Eigen::VectorXd k5 = seg.derivative(
            y0 + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4), rho + dp::c5 * h);
        Eigen::VectorXd k6 = seg.derivative(
            y0 + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5), rho + h);
        out.y1 = y0 + h * (dp::b1 * k1 + dp::b3 * k3 + dp::b4 * k4 + dp::b5 * k5 + dp::b6 * k6);
        out.f1 = seg.derivative(out.y1, rho + h);
        Eigen::VectorXd e = h * (dp::e1 * k1 + dp::e3 * k3 + dp::e4 * k4 + dp::e5 * k5 +
                                 dp::e6 * k6 + dp::e7 * out.f1);
        double err = 0.0;
        for (int i = 0; i < y0.size(); ++i) {
            double sc = 1e-10 + rtol * std::max(std::abs(y0[i]), std::abs(out.y1[i]));
            err += (e[i] / sc) * (e[i] / sc);
        }
        out.err = (y0.size() > 0) ? std::sqrt(err / y0.size()) : 0.0;
    } catch (const SingularHessianError&) {
        out.singular = true;
    }
    return out;
}

// Cubic Hermite interpolation on [rho0, rho0+h].
Eigen::VectorXd hermite(double rho0, double h, const Eigen::VectorXd& y0,
                        const Eigen::VectorXd& f0, const Eigen::VectorXd& y1,
                        const Eigen::VectorXd& f1, double rho) {
    double t = (rho - rho0) / h;
    double t2 = t * t, t3 = t2 * t;
    double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t, h01 = -2 * t3 + 3 * t2,
           h11 = t3 - t2;
    return h00 * y0 + (h10 * h) * f0 + h01 * y1 + (h11 * h) * f1;
}

}  // namespace

std::string to_string(EventKind kind) {
    switch (kind) {
        case EventKind::Deactivate: return "deactivate";
        case EventKind::Activate: return "activate";
        case EventKind::Jump: return "jump";
        case EventKind::HessianSingular: return "hessian_singular";
        case EventKind::Separation: return "separation";
        case EventKind::RankLimit: return "rank_limit";
        case EventKind::MaxPredictors: return "max_predictors";
        case EventKind::StepFailure: return "step_failure";
    }
    return "?";
}

Eigen::VectorXd SolutionPath::beta_at(size_t sample_index) const {
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(meta.p);
    for (auto [j, v] : samples[sample_index].nonzero) beta[j] = v;
    return beta;
}

PathInit init_path(const GlmProblem& prob, const Penalty& penalty, const PathOptions& opts) {
    const int p = prob.p();
    PathInit init;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);

    const auto& unpen = prob.unpenalized();
    if (!unpen.empty()) {
        if (prob.loss() == Loss::Gaussian) {
            Eigen::MatrixXd xu(prob.n(), unpen.size());
            for (size_t k = 0; k < unpen.size(); ++k) xu.col(k) = prob.design().col(unpen[k]);
            Eigen::VectorXd sol = (xu.transpose() * xu).ldlt().solve(xu.transpose() * prob.response());
            for (size_t k = 0; k < unpen.size(); ++k) beta[unpen[k]] = sol[k];
        } else {
            // damped Newton on the unpenalized block
            bool ok = false;
            for (int it = 0; it < 200; ++it) {
                if (prob.detect_separation(beta, opts.l_sep))
                    throw SeparationError("init_path: separation in unpenalized fit");
                Eigen::VectorXd g = prob.loss_gradient(beta);
                double gn = 0.0;
                for (int j : unpen) gn = std::max(gn, std::abs(g[j]));
                if (gn <= 1e-10) { ok = true; break; }
                Eigen::MatrixXd h = prob.loss_hessian(beta, unpen);
                Eigen::VectorXd gu(unpen.size());
                for (size_t k = 0; k < unpen.size(); ++k) gu[k] = g[unpen[k]];
                Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
                if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 0.0)
                    throw SeparationError("init_path: unpenalized Hessian not positive definite");
                Eigen::VectorXd step = ldlt.solve(gu);
                double f0 = prob.loss_value(beta);
                double t = 1.0;
                for (int ls = 0; ls < 40; ++ls) {
                    Eigen::VectorXd cand = beta;
                    for (size_t k = 0; k < unpen.size(); ++k) cand[unpen[k]] -= t * step[k];
                    if (prob.loss_value(cand) <= f0) { beta = cand; break; }
                    t *= 0.5;
                    if (ls == 39) beta = cand;
                }
            }
            if (!ok) throw SeparationError("init_path: unpenalized Newton did not converge");
        }
    }

    Eigen::VectorXd grad = prob.loss_gradient(beta);
    Eigen::VectorXd hdiag = prob.loss_hessian_diagonal(beta);
    double rho_max = 0.0, rho_scale = 0.0;
    int jstar = -1;
    bool capped = false;
    for (int j : prob.penalized()) {
        double a = hdiag[j];
        if (a <= 1e-12) continue;
        double b = -grad[j] / a;
        rho_scale = std::max(rho_scale, a * std::abs(b));
        double e = penalty.entry_rho({a, b});
        if (e > rho_max || jstar < 0) {
            rho_max = e;
            jstar = j;
        }
    }
    if (std::isinf(rho_max)) {
        rho_max = 1e6 * std::max(rho_scale, 1e-12);
        capped = true;
    }

    init.state.rho = rho_max;
    init.state.beta = std::move(beta);
    init.state.part.sz = prob.penalized();
    init.rho_max = rho_max;
    init.first_predictor = jstar;
    init.rho_scale = rho_scale;
    init.rho_max_capped = capped;

    init.state.omega.resize(init.state.part.sz.size());
    for (size_t k = 0; k < init.state.part.sz.size(); ++k) {
        int j = init.state.part.sz[k];
        double d = (rho_max > 0.0) ? penalty.d1(0.0, rho_max) : 0.0;
        init.state.omega[k] = (d > 0.0 && std::isfinite(d)) ? -grad[j] / d : kInf;
    }
    return init;
}

Eigen::VectorXd path_derivative(const GlmProblem& prob, const Penalty& penalty,
                                const PathState& state) {
    Segment seg(prob, penalty);
    std::vector<double> signs(prob.p(), 0.0);
    for (int j : state.part.sz_bar) signs[j] = sgn(state.beta[j]);
    seg.rebuild(state.beta, state.part, signs);
    return seg.derivative(seg.pack(state.beta), state.rho);
}

std::pair<double, bool> event_activation_check(const GlmProblem& prob, const Penalty& penalty,
                                               const PathState& state, int j) {
    Eigen::VectorXd grad = prob.loss_gradient(state.beta);
    Eigen::VectorXd hdiag = prob.loss_hessian_diagonal(state.beta);
    double d0 = penalty.d1(0.0, state.rho);
    double omega = (d0 > 0.0 && std::isfinite(d0)) ? -grad[j] / d0 : kInf;
    double a = hdiag[j];
    bool jumps = false;
    if (a > 1e-12) {
        double b = state.beta[j] - grad[j] / a;
        jumps = penalty.threshold({a, b}, state.rho) != 0.0;
    }
    return {omega, jumps};
}

double stationarity_residual(const GlmProblem& prob, const Penalty& penalty,
                             const PathState& state) {
    Eigen::VectorXd grad = prob.loss_gradient(state.beta);
    double res = 0.0;
    for (int j : prob.unpenalized()) res = std::max(res, std::abs(grad[j]));
    for (int j : state.part.sz_bar) {
        double t = std::abs(state.beta[j]);
        res = std::max(res, std::abs(grad[j] + penalty.d1(t, state.rho) * sgn(state.beta[j])));
    }
    double d0 = penalty.d1(0.0, state.rho);
    for (int j : state.part.sz) {
        if (std::isinf(d0)) continue;
        res = std::max(res, std::max(0.0, std::abs(grad[j]) - d0));
    }
    return res;
}

PathState state_at(const GlmProblem& prob, const Penalty& penalty, const SolutionPath& path,
                   size_t sample_index) {
    PathState st;
    st.rho = path.samples[sample_index].rho;
    st.beta = path.beta_at(sample_index);
    for (int j : prob.penalized()) {
        if (st.beta[j] != 0.0)
            st.part.sz_bar.push_back(j);
        else
            st.part.sz.push_back(j);
    }
    Eigen::VectorXd grad = prob.loss_gradient(st.beta);
    double d0 = penalty.d1(0.0, st.rho);
    st.omega.resize(st.part.sz.size());
    for (size_t k = 0; k < st.part.sz.size(); ++k)
        st.omega[k] = (d0 > 0.0 && std::isfinite(d0)) ? -grad[st.part.sz[k]] / d0 : kInf;
    return st;
}

// ---------------------------------------------------------------------------
// follow_path
// ---------------------------------------------------------------------------
namespace {

struct Follower {
    const GlmProblem& prob;
    const Penalty& pen;
    PathOptions opts;
    SolutionPath path;
    Segment seg;
    Eigen::VectorXd beta;           // dense p
    std::vector<double> signs;      // size p
    ActivePartition part;
    double rho = 0.0;
    double rho_min = 0.0;
    double rho_range = 0.0;
    int rank = 0;
    Eigen::VectorXd gauss_col_sq;
    int steps_used = 0;
    int stall_events = 0;
    double last_event_rho = kInf;

    Follower(const GlmProblem& p_, const Penalty& pen_, const PathOptions& o)
        : prob(p_), pen(pen_), opts(o), seg(p_, pen_) {}

    void emit_sample() {
        // keep rho strictly decreasing
        if (!path.samples.empty() && rho >= path.samples.back().rho) return;
        PathSample s;
        s.rho = rho;
        for (int j = 0; j < prob.p(); ++j)
            if (beta[j] != 0.0) s.nonzero.emplace_back(j, beta[j]);
        path.samples.push_back(std::move(s));
    }

    void record_event(EventKind kind, double erho, int index, std::string detail) {
        path.events.push_back({kind, erho, index, std::move(detail)});
        if (erho > last_event_rho - 1e-12 * (1.0 + last_event_rho))
            ++stall_events;
        else
            stall_events = 0;
        last_event_rho = erho;
    }

    void refresh_segment() { seg.rebuild(beta, part, signs); }

    FullView view_at(const Eigen::VectorXd& ya) const {
        return full_view(prob, seg, ya, gauss_col_sq);
    }

    // inactive-coordinate predicates at a trial point
    double omega_of(const FullView& v, double trho, int j) const {
        double d0 = pen.d1(0.0, trho);
        if (!(d0 > 0.0) || std::isinf(d0)) return kInf;
        return -v.grad[j] / d0;
    }
    bool jump_of(const FullView& v, double trho, int j) const {
        double a = v.hdiag[j];
        if (a <= 1e-12) return false;
        double b = -v.grad[j] / a;  // beta_j = 0 for j in sz
        return pen.threshold({a, b}, trho) != 0.0;
    }

    // Activate j at the current (rho, beta): beta_j = 0, tracked sign = s.
    // Returns false (and leaves sets unchanged) when the entering direction
    // is inconsistent, i.e. the ODE would immediately pull beta_j across 0.
    bool activate(int j, double s) {
        part.sz.erase(std::remove(part.sz.begin(), part.sz.end(), j), part.sz.end());
        part.sz_bar.push_back(j);
        std::sort(part.sz_bar.begin(), part.sz_bar.end());
        signs[j] = s;
        beta[j] = 0.0;
        refresh_segment();
        bool ok = true;
        try {
            Eigen::VectorXd d = seg.derivative(seg.pack(beta), rho);
            int k = static_cast<int>(std::lower_bound(seg.active.begin(), seg.active.end(), j) -
                                     seg.active.begin());
            ok = (-d[k]) * s > 0.0;  // velocity with decreasing rho
        } catch (const SingularHessianError&) {
            ok = false;
        }
        if (!ok) {
            part.sz_bar.erase(std::remove(part.sz_bar.begin(), part.sz_bar.end(), j),
                              part.sz_bar.end());
            part.sz.push_back(j);
            std::sort(part.sz.begin(), part.sz.end());
            signs[j] = 0.0;
            refresh_segment();
        }
        return ok;
    }

    void deactivate(int j) {
        part.sz_bar.erase(std::remove(part.sz_bar.begin(), part.sz_bar.end(), j),
                          part.sz_bar.end());
        part.sz.push_back(j);
        std::sort(part.sz.begin(), part.sz.end());
        signs[j] = 0.0;
        beta[j] = 0.0;
        refresh_segment();
    }

    // CD recovery at fixed rho (events (3)/(4) and capped starts). Updates
    // beta/partition/signs. Returns max coordinate displacement.
    double cd_recover(double at_rho) {
        CdOptions cdo = opts.cd;
        cdo.l_sep = opts.l_sep;
        CdResult res = cd_solve(prob, pen, at_rho, beta, cdo);
        double moved = (res.beta - beta).cwiseAbs().maxCoeff();
        beta = res.beta;
        part = res.part;
        std::fill(signs.begin(), signs.end(), 0.0);
        for (int j : part.sz_bar) signs[j] = sgn(beta[j]);
        refresh_segment();
        return moved;
    }
};

}  // namespace

SolutionPath follow_path(const GlmProblem& prob, const Penalty& penalty,
                         const PathOptions& opts) {
    Follower fw(prob, penalty, opts);
    PathInit init = init_path(prob, penalty, opts);

    fw.path.meta.loss = prob.loss();
    fw.path.meta.family = penalty.family();
    fw.path.meta.eta = penalty.eta();
    fw.path.meta.n = prob.n();
    fw.path.meta.p = prob.p();
    fw.path.meta.rho_max = init.rho_max;
    fw.path.meta.first_predictor = init.first_predictor;

    fw.beta = init.state.beta;
    fw.part = init.state.part;
    fw.signs.assign(prob.p(), 0.0);
    fw.rho = init.rho_max;

    double anchor = init.rho_max_capped ? init.rho_scale : init.rho_max;
    fw.rho_min = (opts.rho_min >= 0.0) ? opts.rho_min : 1e-4 * anchor;
    fw.rho_min = std::max(fw.rho_min, 1e-300);
    fw.path.meta.rho_min = fw.rho_min;
    fw.rho_range = std::max(init.rho_max - fw.rho_min, 0.0);

    if (prob.loss() == Loss::Gaussian)
        fw.gauss_col_sq = prob.design().colwise().squaredNorm();

    fw.emit_sample();
    if (prob.penalized().empty() || init.rho_max <= 0.0 || fw.rho <= fw.rho_min) {
        fw.path.meta.terminated_by = prob.penalized().empty() ? "empty_penalized_set" : "rho_min";
        return fw.path;
    }

    fw.rank = prob.design_rank();
    fw.refresh_segment();

    const double event_tol = opts.event_tol;
    double h = 0.0;  // carried step size (negative)
    bool have_h = false;

    // bracketized event processing: predicate true at lo, false at hi
    enum class Ev { None, Deact, Act, Sing, Jump };

    auto interp_state = [&](double rho0, double hstep, const Eigen::VectorXd& y0,
                            const Eigen::VectorXd& f0, const Eigen::VectorXd& y1,
                            const Eigen::VectorXd& f1, double trho) {
        Eigen::VectorXd y = hermite(rho0, hstep, y0, f0, y1, f1, trho);
        fw.seg.polish(y, trho);
        return y;
    };

    while (true) {
        // ---- loop-head terminations and immediate events ----
        if (fw.prob.detect_separation(fw.beta, opts.l_sep)) {
            fw.record_event(EventKind::Separation, fw.rho, -1,
                            "linear-predictor guard |x'beta| > l_sep");
            fw.path.meta.terminated_by = "separation";
            break;
        }
        if (static_cast<int>(fw.seg.active.size()) > fw.rank) {
            fw.record_event(EventKind::RankLimit, fw.rho, -1,
                            "|A| exceeds rank of the design");
            fw.path.meta.terminated_by = "rank_limit";
            break;
        }
        if (opts.max_predictors >= 0 &&
            static_cast<int>(fw.seg.active.size()) >= opts.max_predictors) {
            fw.record_event(EventKind::MaxPredictors, fw.rho, -1, "");
            fw.path.meta.terminated_by = "max_predictors";
            break;
        }
        if (fw.rho <= fw.rho_min * (1.0 + 1e-12)) {
            fw.path.meta.terminated_by = "rho_min";
            break;
        }
        if (fw.stall_events > 60) {
            fw.record_event(EventKind::StepFailure, fw.rho, -1, "event stall");
            fw.path.meta.terminated_by = "step_failure";
            break;
        }
        if (fw.steps_used > opts.max_steps) {
            fw.record_event(EventKind::StepFailure, fw.rho, -1, "max_steps exceeded");
            fw.path.meta.terminated_by = "step_failure";
            break;
        }

        {  // immediate activations / jumps already due at the current point
            Eigen::VectorXd ya = fw.seg.pack(fw.beta);
            FullView v = fw.view_at(ya);
            int act_j = -1;
            double act_sign = 0.0;
            for (int j : fw.seg.sz) {
                double w = fw.omega_of(v, fw.rho, j);
                if (std::isfinite(w) && std::abs(w) >= 1.0 + 1e-12) {
                    act_j = j;
                    act_sign = sgn(w);
                    break;
                }
            }
            if (act_j >= 0) {
                double lo = fw.rho * (1.0 - event_tol);
                double mid = fw.rho * (1.0 - 0.5 * event_tol);
                if (fw.activate(act_j, act_sign)) {
                    fw.record_event(EventKind::Activate, mid, act_j, "");
                    fw.rho = lo;
                    Eigen::VectorXd y = fw.seg.pack(fw.beta);
                    fw.seg.polish(y, fw.rho);
                    fw.seg.unpack(y, fw.beta);
                    fw.emit_sample();
                } else {
                    // tangential touch; skip past it
                    fw.rho = lo;
                    ++fw.stall_events;
                }
                have_h = false;
                continue;
            }
            bool jump_due = false;
            for (int j : fw.seg.sz)
                if (fw.jump_of(v, fw.rho, j)) { jump_due = true; break; }
            if (jump_due) {
                double mid = fw.rho * (1.0 - 0.5 * event_tol);
                double lo = fw.rho * (1.0 - event_tol);
                fw.rho = lo;
                try {
                    double moved = fw.cd_recover(lo);
                    if (moved <= 10.0 * opts.cd.tol) ++fw.stall_events;
                    fw.record_event(EventKind::Jump, mid, -1,
                                    moved > opts.jump_tol ? "coordinate descent relocation"
                                                          : "activation by thresholding");
                    fw.emit_sample();
                } catch (const SeparationError&) {
                    fw.record_event(EventKind::Separation, lo, -1, "separation during CD");
                    fw.path.meta.terminated_by = "separation";
                    break;
                }
                have_h = false;
                continue;
            }
        }

        // ---- integrate one accepted RK step ----
        Eigen::VectorXd y0 = fw.seg.pack(fw.beta);
        Eigen::VectorXd f0;
        bool f0_singular = false;
        try {
            f0 = fw.seg.derivative(y0, fw.rho);
        } catch (const SingularHessianError&) {
            f0_singular = true;
        }
        if (f0_singular) {
            // singular at the current point: recover by CD and nudge down
            double lo = fw.rho * (1.0 - event_tol);
            fw.record_event(EventKind::HessianSingular, fw.rho, -1, "singular at segment start");
            fw.rho = lo;
            try {
                double moved = fw.cd_recover(lo);
                if (moved > opts.jump_tol)
                    fw.record_event(EventKind::Jump, lo, -1, "post-singularity relocation");
                fw.emit_sample();
            } catch (const SeparationError&) {
                fw.record_event(EventKind::Separation, lo, -1, "separation during CD");
                fw.path.meta.terminated_by = "separation";
                break;
            }
            have_h = false;
            continue;
        }

        double hmax = std::max(opts.max_step_fraction * fw.rho_range, 1e-12 * fw.rho);
        if (!have_h) {
            h = -std::min(hmax, std::max(1e-3 * fw.rho_range, 1e-6 * fw.rho));
            have_h = true;
        }
        h = -std::min(std::abs(h), hmax);
        if (fw.rho + h < fw.rho_min) h = fw.rho_min - fw.rho;

        StepAttempt att;
        bool accepted = false;
        while (!accepted) {
            ++fw.steps_used;
            if (fw.steps_used > opts.max_steps) break;
            if (std::abs(h) < 1e-14 * fw.rho) break;  // step underflow
            att = rk45_step(fw.seg, fw.rho, y0, f0, h, opts.rtol);
            if (att.singular) {
                h *= 0.5;
                continue;
            }
            if (att.err <= 1.0) {
                accepted = true;
            } else {
                h *= std::clamp(0.9 * std::pow(att.err, -0.2), 0.2, 0.9);
            }
        }
        if (!accepted) {
            if (fw.steps_used > opts.max_steps) continue;  // loop head reports it
            // step underflow: try CD recovery once, else give up
            fw.record_event(EventKind::StepFailure, fw.rho, -1, "step size underflow");
            fw.path.meta.terminated_by = "step_failure";
            break;
        }

        double rho0 = fw.rho;
        double rho1 = fw.rho + h;
        Eigen::VectorXd y1 = att.y1;
        fw.seg.polish(y1, rho1);

        // ---- event detection on [rho1, rho0] ----
        FullView v0 = fw.view_at(y0);
        FullView v1 = fw.view_at(y1);

        Ev kind = Ev::None;
        int ev_j = -1;
        double ev_sign = 0.0;

        // per-kind predicates at the step end
        std::vector<int> deact;
        for (size_t k = 0; k < fw.seg.active.size(); ++k) {
            int j = fw.seg.active[k];
            if (!fw.prob.is_penalized(j)) continue;
            double s = fw.signs[j];
            double start = y0[k] * s;
            double end = y1[k] * s;
            if ((start > 0.0 && end <= 0.0) || end < 0.0) deact.push_back(j);
        }
        std::vector<std::pair<int, double>> act;
        for (int j : fw.seg.sz) {
            double w0 = fw.omega_of(v0, rho0, j);
            double w1 = fw.omega_of(v1, rho1, j);
            if (std::isfinite(w1) && std::abs(w1) >= 1.0 && std::abs(w0) < 1.0)
                act.emplace_back(j, sgn(w1));
        }
        bool sing_end = fw.seg.pivot_margin(y1, rho1) <= 0.0;
        bool jump_end = false;
        for (int j : fw.seg.sz)
            if (fw.jump_of(v1, rho1, j)) { jump_end = true; break; }

        // bisect a predicate over [rho1, rho0]: returns (lo, hi), predicate
        // true at lo, false at hi
        auto bisect = [&](auto&& pred) -> std::pair<double, double> {
            double hi = rho0, lo = rho1;
            while (hi - lo > event_tol * std::max(std::abs(hi), 1e-30)) {
                double mid = 0.5 * (lo + hi);
                Eigen::VectorXd ym = interp_state(rho0, h, y0, f0, y1, att.f1, mid);
                if (pred(ym, mid))
                    lo = mid;
                else
                    hi = mid;
            }
            return {lo, hi};
        };

        double best_rho = -kInf;
        std::pair<double, double> best_bracket{rho1, rho0};

        auto consider = [&](Ev k2, int j2, double s2, std::pair<double, double> br) {
            double tie = 10.0 * event_tol * std::max(std::abs(br.second), 1e-30);
            if (br.first > best_rho + tie) {
                best_rho = br.first;
                best_bracket = br;
                kind = k2;
                ev_j = j2;
                ev_sign = s2;
            }
            // within the tie window the fixed order Deact, Act, Sing, Jump
            // wins because candidates are considered in that order
        };

        for (int j : deact) {
            int k = static_cast<int>(std::lower_bound(fw.seg.active.begin(), fw.seg.active.end(), j) -
                                     fw.seg.active.begin());
            double s = fw.signs[j];
            auto br = bisect([&](const Eigen::VectorXd& ym, double) { return ym[k] * s <= 0.0; });
            consider(Ev::Deact, j, s, br);
        }
        for (auto [j, s] : act) {
            auto br = bisect([&](const Eigen::VectorXd& ym, double trho) {
                FullView vm = fw.view_at(ym);
                double w = fw.omega_of(vm, trho, j);
                return std::isfinite(w) && std::abs(w) >= 1.0;
            });
            consider(Ev::Act, j, s, br);
        }
        if (sing_end) {
            auto br = bisect([&](const Eigen::VectorXd& ym, double trho) {
                return fw.seg.pivot_margin(ym, trho) <= 0.0;
            });
            consider(Ev::Sing, -1, 0.0, br);
        }
        if (jump_end) {
            auto br = bisect([&](const Eigen::VectorXd& ym, double trho) {
                FullView vm = fw.view_at(ym);
                for (int j : fw.seg.sz)
                    if (fw.jump_of(vm, trho, j)) return true;
                return false;
            });
            consider(Ev::Jump, -1, 0.0, br);
        }

        if (kind == Ev::None) {
            // plain accepted step
            fw.rho = rho1;
            fw.seg.unpack(y1, fw.beta);
            fw.emit_sample();
            h *= std::clamp(0.9 * std::pow(std::max(att.err, 1e-10), -0.2), 1.0, 5.0);
            continue;
        }

        // pre-event sample at the hi side of the bracket
        double ev_hi = best_bracket.second, ev_lo = best_bracket.first;
        Eigen::VectorXd y_hi = interp_state(rho0, h, y0, f0, y1, att.f1, ev_hi);
        fw.rho = ev_hi;
        fw.seg.unpack(y_hi, fw.beta);
        fw.emit_sample();
        double ev_mid = 0.5 * (ev_lo + ev_hi);

        Eigen::VectorXd y_lo = interp_state(rho0, h, y0, f0, y1, att.f1, ev_lo);
        fw.rho = ev_lo;
        fw.seg.unpack(y_lo, fw.beta);

        switch (kind) {
            case Ev::Deact:
                fw.record_event(EventKind::Deactivate, ev_mid, ev_j, "");
                fw.deactivate(ev_j);
                fw.emit_sample();
                break;
            case Ev::Act:
                if (fw.activate(ev_j, ev_sign)) {
                    fw.record_event(EventKind::Activate, ev_mid, ev_j, "");
                    Eigen::VectorXd y = fw.seg.pack(fw.beta);
                    fw.seg.polish(y, fw.rho);
                    fw.seg.unpack(y, fw.beta);
                    fw.emit_sample();
                } else {
                    ++fw.stall_events;
                }
                break;
            case Ev::Sing:
            case Ev::Jump:
                try {
                    double moved = fw.cd_recover(ev_lo);
                    if (moved <= 10.0 * opts.cd.tol) ++fw.stall_events;
                    if (kind == Ev::Sing) {
                        fw.record_event(EventKind::HessianSingular, ev_mid, -1, "");
                        if (moved > opts.jump_tol)
                            fw.record_event(EventKind::Jump, ev_mid, -1,
                                            "post-singularity relocation");
                    } else {
                        fw.record_event(EventKind::Jump, ev_mid, -1,
                                        moved > opts.jump_tol ? "coordinate descent relocation"
                                                              : "activation by thresholding");
                    }
                    fw.emit_sample();
                } catch (const SeparationError&) {
                    fw.record_event(EventKind::Separation, ev_lo, -1, "separation during CD");
                    fw.path.meta.terminated_by = "separation";
                    fw.path.meta.rho_min = fw.rho_min;
                    return fw.path;
                }
                break;
            case Ev::None:
                break;
        }
        have_h = false;
    }

    return fw.path;
}

}  // namespace sparsepath

#include "sparsepath/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sparsepath {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_domain(double t, double rho) {
    if (t < 0.0) throw std::domain_error("penalty: t must be >= 0");
    if (rho < 0.0) throw std::domain_error("penalty: rho must be >= 0");
}

// Newton with a bisection safeguard on phi(t) = a(t - c) + rho*eta*t^(eta-1),
// the power-family estimating equation, over the bracket [lo, hi] where
// phi(lo) and phi(hi) have opposite signs (phi(hi) > 0).
double power_root(double a, double c, double rho, double eta, double lo, double hi) {
    auto phi = [&](double t) { return a * (t - c) + rho * eta * std::pow(t, eta - 1.0); };
    auto dphi = [&](double t) { return a + rho * eta * (eta - 1.0) * std::pow(t, eta - 2.0); };
    double t = hi;
    for (int it = 0; it < 200; ++it) {
        double f = phi(t);
        if (std::abs(f) <= 1e-12 * (1.0 + a * c)) return t;
        if (f > 0.0) hi = t; else lo = t;
        double d = dphi(t);
        double step = (d != 0.0) ? f / d : 0.0;
        double tn = t - step;
        if (!(tn > lo && tn < hi)) tn = 0.5 * (lo + hi);
        if (tn == t) break;
        t = tn;
    }
    return t;
}

}  // namespace

std::string to_string(PenaltyFamily family) {
    switch (family) {
        case PenaltyFamily::Power: return "power";
        case PenaltyFamily::ElasticNet: return "enet";
        case PenaltyFamily::Log: return "log";
        case PenaltyFamily::ContinuousLog: return "contlog";
        case PenaltyFamily::Scad: return "scad";
        case PenaltyFamily::McPlus: return "mcplus";
    }
    return "?";
}

Penalty::Penalty(PenaltyFamily family, double eta) : family_(family), eta_(eta) {
    switch (family) {
        case PenaltyFamily::Power:
            if (!(eta > 0.0 && eta <= 2.0)) throw std::invalid_argument("power: eta must be in (0, 2]");
            break;
        case PenaltyFamily::ElasticNet:
            if (!(eta >= 1.0 && eta <= 2.0)) throw std::invalid_argument("enet: eta must be in [1, 2]");
            break;
        case PenaltyFamily::Log:
            if (!(eta > 0.0)) throw std::invalid_argument("log: eta must be > 0");
            break;
        case PenaltyFamily::ContinuousLog:
            eta_ = std::numeric_limits<double>::quiet_NaN();  // no shape parameter
            break;
        case PenaltyFamily::Scad:
            if (!(eta > 2.0)) throw std::invalid_argument("scad: eta must be > 2");
            break;
        case PenaltyFamily::McPlus:
            if (!(eta > 0.0)) throw std::invalid_argument("mcplus: eta must be > 0");
            break;
    }
}

double Penalty::value(double t, double rho) const {
    check_domain(t, rho);
    switch (family_) {
        case PenaltyFamily::Power:
            return rho * std::pow(t, eta_);
        case PenaltyFamily::ElasticNet:
            return rho * ((eta_ - 1.0) * t * t / 2.0 + (2.0 - eta_) * t);
        case PenaltyFamily::Log:
            return rho * std::log(eta_ + t);
        case PenaltyFamily::ContinuousLog:
            if (rho == 0.0) return 0.0;
            return rho * std::log(std::sqrt(rho) + t);
        case PenaltyFamily::Scad: {
            if (t < rho) return rho * t;
            if (t <= eta_ * rho)
                return rho * rho + eta_ * rho * (t - rho) / (eta_ - 1.0)
                       - (t * t - rho * rho) / (2.0 * (eta_ - 1.0));
            return rho * rho * (eta_ + 1.0) / 2.0;
        }
        case PenaltyFamily::McPlus: {
            if (t < rho * eta_) return rho * t - t * t / (2.0 * eta_);
            return rho * rho * eta_ / 2.0;
        }
    }
    return 0.0;
}

double Penalty::d1(double t, double rho) const {
    check_domain(t, rho);
    switch (family_) {
        case PenaltyFamily::Power:
            if (t == 0.0) {
                if (eta_ < 1.0) return rho == 0.0 ? 0.0 : kInf;
                if (eta_ == 1.0) return rho;
                return 0.0;
            }
            return rho * eta_ * std::pow(t, eta_ - 1.0);
        case PenaltyFamily::ElasticNet:
            return rho * ((eta_ - 1.0) * t + (2.0 - eta_));
        case PenaltyFamily::Log:
            return rho / (eta_ + t);
        case PenaltyFamily::ContinuousLog:
            if (rho == 0.0) return 0.0;
            return rho / (std::sqrt(rho) + t);
        case PenaltyFamily::Scad: {
            if (t <= rho) return rho;
            double num = std::max(eta_ * rho - t, 0.0);
            return rho * num / ((eta_ - 1.0) * rho);
        }
        case PenaltyFamily::McPlus:
            return rho * std::max(1.0 - t / (rho * eta_), 0.0);
    }
    return 0.0;
}

double Penalty::d2_tt(double t, double rho) const {
    check_domain(t, rho);
    switch (family_) {
        case PenaltyFamily::Power:
            if (t == 0.0) {
                if (eta_ == 2.0) return 2.0 * rho;
                if (eta_ == 1.0) return 0.0;
                if (rho == 0.0) return 0.0;
                throw std::domain_error("power d2_tt diverges at t = 0");
            }
            return rho * eta_ * (eta_ - 1.0) * std::pow(t, eta_ - 2.0);
        case PenaltyFamily::ElasticNet:
            return rho * (eta_ - 1.0);
        case PenaltyFamily::Log:
            return -rho / ((eta_ + t) * (eta_ + t));
        case PenaltyFamily::ContinuousLog: {
            if (rho == 0.0) return 0.0;
            double s = std::sqrt(rho) + t;
            return -rho / (s * s);
        }
        case PenaltyFamily::Scad:
            // rho_- limit at the knots: half-open [rho, eta*rho)
            return (t >= rho && t < eta_ * rho) ? -1.0 / (eta_ - 1.0) : 0.0;
        case PenaltyFamily::McPlus:
            return (t < rho * eta_) ? -1.0 / eta_ : 0.0;
    }
    return 0.0;
}

double Penalty::d2_trho(double t, double rho) const {
    check_domain(t, rho);
    switch (family_) {
        case PenaltyFamily::Power:
            if (t == 0.0) {
                if (eta_ < 1.0) return kInf;
                if (eta_ == 1.0) return 1.0;
                return 0.0;
            }
            return eta_ * std::pow(t, eta_ - 1.0);
        case PenaltyFamily::ElasticNet:
            return (eta_ - 1.0) * t + (2.0 - eta_);
        case PenaltyFamily::Log:
            return 1.0 / (eta_ + t);
        case PenaltyFamily::ContinuousLog: {
            if (rho == 0.0) throw std::domain_error("contlog d2_trho diverges at rho = 0");
            double sr = std::sqrt(rho);
            double s = sr + t;
            return 1.0 / s - 0.5 * sr / (s * s);
        }
        case PenaltyFamily::Scad: {
            if (t < rho) return 1.0;
            if (t < eta_ * rho) return eta_ / (eta_ - 1.0);
            return 0.0;
        }
        case PenaltyFamily::McPlus:
            return (t < rho * eta_) ? 1.0 : 0.0;
    }
    return 0.0;
}

std::vector<double> Penalty::threshold_candidates(const ScalarQuadratic& q, double rho) const {
    if (!(q.a > 0.0)) throw std::domain_error("threshold: a must be > 0");
    if (rho < 0.0) throw std::domain_error("threshold: rho must be >= 0");
    const double a = q.a;
    const double c = std::abs(q.b);
    std::vector<double> cands;
    cands.push_back(0.0);
    if (c == 0.0) return cands;
    if (rho == 0.0) {
        cands.push_back(c);
        return cands;
    }

    switch (family_) {
        case PenaltyFamily::Power: {
            if (eta_ == 1.0) {
                double t = c - rho / a;
                if (t > 0.0) cands.push_back(t);
            } else if (eta_ == 2.0) {
                cands.push_back(a * c / (a + 2.0 * rho));
            } else if (eta_ > 1.0) {
                // phi(0+) = -ac < 0, phi(c) > 0: unique root in (0, c)
                cands.push_back(power_root(a, c, rho, eta_, 0.0, c));
            } else {
                // eta < 1: local min is the larger root beyond the vertex
                // t* = [rho*eta*(1-eta)/a]^(1/(2-eta)), if phi(t*) <= 0.
                double tstar = std::pow(rho * eta_ * (1.0 - eta_) / a, 1.0 / (2.0 - eta_));
                auto phi = [&](double t) { return a * (t - c) + rho * eta_ * std::pow(t, eta_ - 1.0); };
                if (tstar < c && phi(tstar) <= 0.0)
                    cands.push_back(power_root(a, c, rho, eta_, tstar, c));
            }
            break;
        }
        case PenaltyFamily::ElasticNet: {
            double t = (a * c - rho * (2.0 - eta_)) / (a + rho * (eta_ - 1.0));
            if (t > 0.0) cands.push_back(t);
            break;
        }
        case PenaltyFamily::Log: {
            double disc = (c + eta_) * (c + eta_) - 4.0 * rho / a;
            if (disc >= 0.0) {
                double t = 0.5 * ((c - eta_) + std::sqrt(disc));
                if (t > 0.0) cands.push_back(t);
            }
            break;
        }
        case PenaltyFamily::ContinuousLog: {
            double sr = std::sqrt(rho);
            double disc = (c + sr) * (c + sr) - 4.0 * rho / a;
            if (disc >= 0.0) {
                double t = 0.5 * ((c - sr) + std::sqrt(disc));
                if (t > 0.0) cands.push_back(t);
            }
            break;
        }
        case PenaltyFamily::Scad: {
            double u1 = std::min(rho, c);
            double r1 = (a * c - rho) / a;  // soft threshold on [0, rho]
            if (r1 > 0.0) cands.push_back(std::min(r1, u1));
            double u2 = std::min(eta_ * rho, c);
            if (u2 >= rho) {
                // region [rho, eta*rho]: interior stationary point only when
                // the quadratic is convex there; endpoints always evaluated
                double denom = a * (eta_ - 1.0) - 1.0;
                if (denom > 1e-12) {
                    double r2 = (a * c * (eta_ - 1.0) - eta_ * rho) / denom;
                    cands.push_back(std::clamp(r2, rho, u2));
                }
                cands.push_back(rho);
                cands.push_back(u2);
            }
            if (c > eta_ * rho) cands.push_back(c);  // flat region
            break;
        }
        case PenaltyFamily::McPlus: {
            double bstar = std::min(rho * eta_, c);
            double denom = a - 1.0 / eta_;
            if (denom > 1e-12) {
                double r = (a * c - rho) / denom;
                if (r > 0.0) cands.push_back(std::clamp(r, 0.0, bstar));
            }
            cands.push_back(bstar);
            if (c >= rho * eta_) cands.push_back(c);  // flat region
            break;
        }
    }
    std::sort(cands.begin(), cands.end());
    cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
    return cands;
}

double Penalty::threshold(const ScalarQuadratic& q, double rho) const {
    const double a = q.a;
    const double c = std::abs(q.b);
    const double sign = (q.b > 0.0) ? 1.0 : (q.b < 0.0 ? -1.0 : 0.0);
    auto objective = [&](double t) { return 0.5 * a * (t - c) * (t - c) + value(t, rho); };

    double best = 0.0;
    double best_obj = objective(0.0);
    for (double t : threshold_candidates(q, rho)) {
        if (t == 0.0) continue;
        double obj = objective(t);
        if (obj < best_obj) {  // strict: exact ties break to 0 / smaller t
            best = t;
            best_obj = obj;
        }
    }
    return sign * best;
}

double Penalty::entry_rho(const ScalarQuadratic& q) const {
    if (!(q.a > 0.0)) throw std::domain_error("entry_rho: a must be > 0");
    if (q.b == 0.0) return 0.0;
    double scale = q.a * std::abs(q.b);
    double hi = std::max(scale, 1e-300);
    int doublings = 0;
    while (threshold(q, hi) != 0.0) {
        hi *= 2.0;
        if (++doublings > 200) return kInf;  // no finite entry point
    }
    double lo = 0.0;
    while (hi - lo > 1e-10 * hi) {
        double mid = 0.5 * (lo + hi);
        if (threshold(q, mid) != 0.0) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace sparsepath

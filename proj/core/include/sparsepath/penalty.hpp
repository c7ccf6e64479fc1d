#pragma once

#include <string>
#include <vector>

namespace sparsepath {

enum class PenaltyFamily { Power, ElasticNet, Log, ContinuousLog, Scad, McPlus };

std::string to_string(PenaltyFamily family);

// Scalar quadratic (a/2)(beta - b)^2: the component-wise model whose penalized
// minimizer is the thresholding operator. a = ||x_j||^2 (curvature), b = the
// unconstrained coordinate minimizer.
struct ScalarQuadratic {
    double a;
    double b;
};

// One of six scalar penalty families P_eta(t, rho), t = |beta| >= 0, with its
// shape parameter eta. Valid eta ranges: Power (0,2], ElasticNet [1,2],
// Log > 0, Scad > 2, McPlus > 0; ContinuousLog has no shape parameter.
// All methods are pure and thread-safe.
class Penalty {
public:
    Penalty(PenaltyFamily family, double eta);
    static Penalty power(double eta) { return {PenaltyFamily::Power, eta}; }
    static Penalty elastic_net(double eta) { return {PenaltyFamily::ElasticNet, eta}; }
    static Penalty log_penalty(double eta) { return {PenaltyFamily::Log, eta}; }
    static Penalty continuous_log() { return {PenaltyFamily::ContinuousLog, 0.0}; }
    static Penalty scad(double eta) { return {PenaltyFamily::Scad, eta}; }
    static Penalty mc_plus(double eta) { return {PenaltyFamily::McPlus, eta}; }

    PenaltyFamily family() const { return family_; }
    double eta() const { return eta_; }

    // P_eta(t, rho). Continuous in t; piecewise formulas agree at the
    // SCAD/MC+ knots. Throws std::domain_error for negative t or rho.
    double value(double t, double rho) const;

    // dP/dt. May be +inf at t = 0 (Power with eta < 1).
    double d1(double t, double rho) const;

    // d2P/dt2 and d2P/dt drho. At the SCAD/MC+ knots the rho_- limit is
    // returned (half-open regions [rho, eta*rho) resp. [0, eta*rho)).
    // Throws std::domain_error at t = 0 when the value diverges there.
    double d2_tt(double t, double rho) const;
    double d2_trho(double t, double rho) const;

    // Global minimizer of (a/2)(beta - b)^2 + P(|beta|, rho). All candidate
    // stationary points plus 0 are compared by exact objective value; ties
    // break to 0. The result has the sign of b (or is 0).
    double threshold(const ScalarQuadratic& q, double rho) const;

    // Candidate magnitudes considered by threshold(): 0 plus every stationary
    // point / region boundary that can host a local minimum (ascending order).
    std::vector<double> threshold_candidates(const ScalarQuadratic& q, double rho) const;

    // Largest rho at which threshold(q, rho) is nonzero, by bisection to
    // 1e-10 relative; 0 when b = 0; +inf for families with no finite entry
    // point (Power eta > 1, ElasticNet eta = 2).
    double entry_rho(const ScalarQuadratic& q) const;

private:
    PenaltyFamily family_;
    double eta_;
};

}  // namespace sparsepath

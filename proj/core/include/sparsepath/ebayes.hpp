#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sparsepath/model.hpp"
#include "sparsepath/path.hpp"
#include "sparsepath/penalty.hpp"

namespace sparsepath {

enum class EbFlag {
    Ok,
    RhoOutOfRange,    // log prior needs rho > 1
    SingularHessian,
    IndefiniteHessian,
    NonInteriorSigma,  // profiled sigma^2 hit a bracket end
    PerfectFit,        // h <= 0 in the closed-form sigma^2
};

// Laplace-approximation score of one path point. criterion is finite or the
// +inf sentinel (inadmissible point, see flag). The three exposed terms sum
// to the criterion exactly.
struct EbScore {
    double rho = 0.0;
    double eta = 0.0;
    int q = 0;  // |A|
    double criterion = 0.0;
    std::optional<double> sigma2;  // profiled variance (linear forms only)
    EbFlag flag = EbFlag::Ok;
    double normalization = 0.0;  // prior-normalization term
    double fit = 0.0;            // h(beta~) (GLM forms) or its profiled analogue
    double half_logdet = 0.0;    // 0.5 log det H_A
};

// Negative Laplace-approximated log marginal likelihood under the
// generalized double Pareto prior (log penalty), GLM form. Requires rho > 1.
EbScore eb_log_glm(const GlmProblem& prob, const Penalty& penalty, const PathState& state);

// Linear (Gaussian) form with sigma^2 profiled by golden-section
// minimization of the negative log marginal.
EbScore eb_log_linear(const GlmProblem& prob, const Penalty& penalty, const PathState& state);

// Exponential-power prior (power family), GLM form.
EbScore eb_power_glm(const GlmProblem& prob, const Penalty& penalty, const PathState& state);

// Linear form with the closed-form sigma~^2 = h / ((n-q)/2 + q/eta).
EbScore eb_power_linear(const GlmProblem& prob, const Penalty& penalty, const PathState& state);

enum class SelectionCriterion { EmpiricalBayes, Aic, Bic };

std::string to_string(SelectionCriterion c);

struct SelectionResult {
    EbScore best;
    size_t path_index = 0;
    size_t sample_index = 0;
    // scores[k][i] scores path k's sample i (+inf sentinel kept in place)
    std::vector<std::vector<EbScore>> scores;
};

// Score every sample of every path and return the global minimizer.
// EmpiricalBayes dispatches on the penalty family (Log / Power; Gaussian
// problems use the linear forms) and refuses families without a proper-prior
// criterion; pass Aic/Bic explicitly for those. Throws AllInadmissibleError
// when every sample scores +inf.
SelectionResult select_model(const GlmProblem& prob,
                             const std::vector<std::pair<Penalty, const SolutionPath*>>& paths,
                             SelectionCriterion criterion);

// Single-path convenience overload.
SelectionResult select_model(const GlmProblem& prob, const Penalty& penalty,
                             const SolutionPath& path, SelectionCriterion criterion);

class AllInadmissibleError : public std::runtime_error {
public:
    explicit AllInadmissibleError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sparsepath

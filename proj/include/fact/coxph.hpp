#pragma once

#include <cstdint>
#include <vector>

#include "fact/step_function.hpp"
#include "fact/survival.hpp"

namespace fact {

struct CoxFit {
  std::vector<double> beta;
  double log_likelihood = 0.0;  // log partial likelihood at beta
  int n_iterations = 0;
  bool converged = false;
};

// Cumulative baseline hazard; survival follows as
// S(t|r) = exp(-cumulative(t) * exp(r)).
struct BaselineHazard {
  StepFunction cumulative;  // nondecreasing, left_value 0
};

// Breslow-tie negative log partial likelihood and its derivatives; shared
// between the Newton fit below and tests that cross-check the neural loss.
double cox_partial_nll(const std::vector<double>& x, int n, int p,
                       const std::vector<double>& durations,
                       const std::vector<uint8_t>& events,
                       const std::vector<double>& beta,
                       std::vector<double>* grad = nullptr,
                       std::vector<double>* hessian = nullptr);

// Newton-Raphson maximization of the Breslow partial likelihood.
// Initialization beta = 0, step-halving line search (up to 10 halvings),
// convergence on gradient max-norm <= tol.
// `x` is n-by-p row-major.
CoxFit fit_coxph(const std::vector<double>& x, int n, int p,
                 const std::vector<double>& durations,
                 const std::vector<uint8_t>& events, int max_iter = 100,
                 double tol = 1e-8);

CoxFit fit_coxph(const std::vector<IdleEvent>& events, int max_iter = 100,
                 double tol = 1e-8);

// Breslow estimator of the cumulative baseline hazard given log-risk
// scores aligned with the observations.
BaselineHazard breslow_baseline(const std::vector<double>& durations,
                                const std::vector<uint8_t>& events,
                                const std::vector<double>& risks);

// S(t) = exp(-cumulative(t) * exp(risk)).
StepFunction survival_curve(const BaselineHazard& baseline, double risk);

}  // namespace fact

#include "fact/coxph.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fact/errors.hpp"

namespace fact {

namespace {

void validate(const std::vector<double>& x, int n, int p,
              const std::vector<double>& durations,
              const std::vector<uint8_t>& events) {
  if (n < 1 || p < 1) throw InvalidArgumentError("coxph: need n >= 1, p >= 1");
  if (static_cast<int>(x.size()) != n * p)
    throw InvalidArgumentError("coxph: design matrix size mismatch");
  if (static_cast<int>(durations.size()) != n ||
      static_cast<int>(events.size()) != n)
    throw InvalidArgumentError("coxph: durations/events length mismatch");
}

}  // namespace

double cox_partial_nll(const std::vector<double>& x, int n, int p,
                       const std::vector<double>& durations,
                       const std::vector<uint8_t>& events,
                       const std::vector<double>& beta,
                       std::vector<double>* grad,
                       std::vector<double>* hessian) {
  validate(x, n, p, durations, events);
  using Vec = Eigen::VectorXd;
  using Mat = Eigen::MatrixXd;
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                 Eigen::RowMajor>>
      X(x.data(), n, p);
  Eigen::Map<const Vec> b(beta.data(), p);

  Vec eta = X * b;
  const double eta_max = eta.maxCoeff();  // log-sum-exp stabilization

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return durations[i] > durations[j]; });

  double nll = 0.0;
  Vec g = Vec::Zero(p);
  Mat h = Mat::Zero(p, p);
  double s0 = 0.0;
  Vec s1 = Vec::Zero(p);
  Mat s2 = Mat::Zero(p, p);

  int i = 0;
  while (i < n) {
    const double t = durations[order[i]];
    int j = i;
    // extend risk set with the whole tie group first (>= is inclusive)
    while (j < n && durations[order[j]] == t) {
      const int k = order[j];
      const double w = std::exp(eta[k] - eta_max);
      s0 += w;
      s1 += w * X.row(k).transpose();
      if (hessian) s2 += w * X.row(k).transpose() * X.row(k);
      ++j;
    }
    const Vec xbar = s1 / s0;
    for (int q = i; q < j; ++q) {
      const int k = order[q];
      if (!events[k]) continue;
      nll += eta_max + std::log(s0) - eta[k];
      g += xbar - X.row(k).transpose();
      if (hessian) h += s2 / s0 - xbar * xbar.transpose();
    }
    i = j;
  }

  if (grad) {
    grad->resize(p);
    Eigen::Map<Vec>(grad->data(), p) = g;
  }
  if (hessian) {
    hessian->resize(static_cast<size_t>(p) * p);
    Eigen::Map<Mat>(hessian->data(), p, p) = h;
  }
  return nll;
}

CoxFit fit_coxph(const std::vector<double>& x, int n, int p,
                 const std::vector<double>& durations,
                 const std::vector<uint8_t>& events, int max_iter,
                 double tol) {
  validate(x, n, p, durations, events);
  if (std::accumulate(events.begin(), events.end(), 0) == 0)
    throw InvalidArgumentError("fit_coxph: no uncensored events");

  std::vector<double> beta(p, 0.0), grad, hess;
  double nll =
      cox_partial_nll(x, n, p, durations, events, beta, &grad, &hess);
  if (!std::isfinite(nll))
    throw DivergedError("fit_coxph: non-finite likelihood at beta = 0", beta);

  CoxFit fit;
  for (int iter = 0; iter < max_iter; ++iter) {
    double gmax = 0.0;
    for (double gi : grad) gmax = std::max(gmax, std::fabs(gi));
    if (gmax <= tol) {
      fit.converged = true;
      break;
    }
    ++fit.n_iterations;

    Eigen::Map<const Eigen::MatrixXd> h(hess.data(), p, p);
    Eigen::Map<const Eigen::VectorXd> g(grad.data(), p);
    Eigen::MatrixXd hreg = h;
    hreg.diagonal().array() += 1e-10;  // guard against singular information
    Eigen::VectorXd step = hreg.ldlt().solve(g);

    // step-halving: accept the first scale that decreases the NLL. A
    // rounding-level slack keeps full Newton steps acceptable near the
    // optimum, where the true decrease is below the summation noise.
    const double slack =
        64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::fabs(nll));
    std::vector<double> cand(p);
    double new_nll = std::numeric_limits<double>::infinity();
    double scale = 1.0;
    bool accepted = false;
    for (int half = 0; half <= 10; ++half, scale *= 0.5) {
      // Newton direction for minimizing the NLL: beta - scale * H^{-1} g.
      for (int q = 0; q < p; ++q) cand[q] = beta[q] - scale * step[q];
      new_nll = cox_partial_nll(x, n, p, durations, events, cand, nullptr,
                                nullptr);
      if (std::isfinite(new_nll) && new_nll <= nll + slack) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (!std::isfinite(new_nll))
        throw DivergedError("fit_coxph: non-finite likelihood (separation?)",
                            beta);
      break;  // no improving step; report non-converged at current beta
    }
    beta = cand;
    nll = cox_partial_nll(x, n, p, durations, events, beta, &grad, &hess);
    if (!std::isfinite(nll))
      throw DivergedError("fit_coxph: diverged during iteration", beta);
  }

  // final convergence check (covers the max_iter exit)
  if (!fit.converged) {
    double gmax = 0.0;
    for (double gi : grad) gmax = std::max(gmax, std::fabs(gi));
    fit.converged = gmax <= tol;
  }
  fit.beta = beta;
  fit.log_likelihood = -nll;
  return fit;
}

CoxFit fit_coxph(const std::vector<IdleEvent>& events, int max_iter,
                 double tol) {
  if (events.empty()) throw InvalidArgumentError("fit_coxph: empty input");
  const int n = static_cast<int>(events.size());
  const int p = static_cast<int>(events[0].covariates.size());
  std::vector<double> x;
  x.reserve(static_cast<size_t>(n) * p);
  std::vector<double> durations(n);
  std::vector<uint8_t> flags(n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(events[i].covariates.size()) != p)
      throw InvalidArgumentError("fit_coxph: ragged covariate vectors");
    x.insert(x.end(), events[i].covariates.begin(), events[i].covariates.end());
    durations[i] = events[i].duration;
    flags[i] = static_cast<uint8_t>(events[i].event);
  }
  return fit_coxph(x, n, p, durations, flags, max_iter, tol);
}

BaselineHazard breslow_baseline(const std::vector<double>& durations,
                                const std::vector<uint8_t>& events,
                                const std::vector<double>& risks) {
  const size_t n = durations.size();
  if (n == 0) throw InvalidArgumentError("breslow_baseline: empty input");
  if (events.size() != n || risks.size() != n)
    throw InvalidArgumentError("breslow_baseline: length mismatch");

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t i, size_t j) { return durations[i] > durations[j]; });

  double rmax = -std::numeric_limits<double>::infinity();
  for (double r : risks) rmax = std::max(rmax, r);

  // walk descending: risk-set denominator grows as duration decreases
  struct Inc {
    double t, d, denom;
  };
  std::vector<Inc> incs;
  double s0 = 0.0;
  size_t i = 0;
  while (i < n) {
    const double t = durations[order[i]];
    size_t j = i;
    double d = 0.0;
    while (j < n && durations[order[j]] == t) {
      s0 += std::exp(risks[order[j]] - rmax);
      d += events[order[j]] ? 1.0 : 0.0;
      ++j;
    }
    if (d > 0.0) incs.push_back({t, d, s0});
    i = j;
  }

  BaselineHazard bh;
  bh.cumulative.left_value = 0.0;
  double cum = 0.0;
  for (auto it = incs.rbegin(); it != incs.rend(); ++it) {
    cum += (it->d / it->denom) * std::exp(-rmax);
    bh.cumulative.knots.push_back(it->t);
    bh.cumulative.values.push_back(cum);
  }
  return bh;
}

StepFunction survival_curve(const BaselineHazard& baseline, double risk) {
  if (!std::isfinite(risk))
    throw InvalidArgumentError("survival_curve: non-finite risk");
  const double er = std::exp(risk);
  StepFunction s;
  s.left_value = 1.0;
  s.knots = baseline.cumulative.knots;
  s.values.resize(s.knots.size());
  for (size_t i = 0; i < s.knots.size(); ++i)
    s.values[i] = std::exp(-baseline.cumulative.values[i] * er);
  return s;
}

}  // namespace fact

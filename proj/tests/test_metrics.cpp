#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "fact/errors.hpp"
#include "fact/metrics.hpp"
#include "fact/rng.hpp"
#include "fact/survival.hpp"

using namespace fact;

namespace {

// O(n^2) concordance oracle, written directly from the definition.
double naive_c_index(const std::vector<double>& r, const std::vector<double>& t,
                     const std::vector<uint8_t>& e, double horizon,
                     int64_t* pairs_out = nullptr) {
  double conc = 0;
  int64_t pairs = 0;
  const size_t n = t.size();
  for (size_t i = 0; i < n; ++i) {
    if (!e[i]) continue;
    if (std::isfinite(horizon) && t[i] > horizon) continue;
    for (size_t j = 0; j < n; ++j) {
      if (i == j || t[i] >= t[j]) continue;
      ++pairs;
      if (r[i] > r[j]) conc += 1.0;
      else if (r[i] == r[j]) conc += 0.5;
    }
  }
  if (pairs_out) *pairs_out = pairs;
  if (pairs == 0) throw UndefinedMetricError("no usable pairs");
  return conc / static_cast<double>(pairs);
}

// Independent Graf-weight oracle for the Brier score.
double naive_brier(const std::vector<StepFunction>& curves,
                   const std::vector<double>& t, const std::vector<uint8_t>& e,
                   double horizon, const StepFunction& g) {
  double sum = 0;
  for (size_t i = 0; i < t.size(); ++i) {
    const double s = curves[i](horizon);
    if (t[i] > horizon)
      sum += (1 - s) * (1 - s) / g(horizon);
    else if (e[i])
      sum += s * s / g.eval_left(t[i]);
  }
  return sum / static_cast<double>(t.size());
}

}  // namespace

TEST_CASE("c_index and truncated variant match the naive oracle exactly") {
  Rng rng(55);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 2 + rng.uniform_int(50);
    std::vector<double> r(n), t(n);
    std::vector<uint8_t> e(n);
    for (int i = 0; i < n; ++i) {
      r[i] = rng.uniform_int(5) * 0.5;  // ties in risk
      t[i] = (1 + rng.uniform_int(10)) * 0.5;
      e[i] = rng.uniform() < 0.7 ? 1 : 0;
    }
    const double horizon = (1 + rng.uniform_int(10)) * 0.5;
    int64_t np_fast = 0, np_naive = 0;
    try {
      const double fast = c_index(r, t, e, &np_fast);
      const double naive = naive_c_index(
          r, t, e, std::numeric_limits<double>::infinity(), &np_naive);
      REQUIRE(fast == naive);
      REQUIRE(np_fast == np_naive);
    } catch (const UndefinedMetricError&) {
      CHECK_THROWS_AS(
          naive_c_index(r, t, e, std::numeric_limits<double>::infinity()),
          UndefinedMetricError);
    }
    try {
      const double fast = c_index_truncated(r, t, e, horizon, &np_fast);
      REQUIRE(fast == naive_c_index(r, t, e, horizon, &np_naive));
      REQUIRE(np_fast == np_naive);
    } catch (const UndefinedMetricError&) {
      CHECK_THROWS_AS(naive_c_index(r, t, e, horizon), UndefinedMetricError);
    }
  }
}

TEST_CASE("c_index hand-worked values") {
  // perfect ranking: higher risk -> earlier event
  CHECK(c_index({3, 2, 1}, {1, 2, 3}, {1, 1, 1}) == 1.0);
  // inverted ranking
  CHECK(c_index({1, 2, 3}, {1, 2, 3}, {1, 1, 1}) == 0.0);
  // constant risks: every pair counts 0.5
  CHECK(c_index({1, 1, 1}, {1, 2, 3}, {1, 1, 1}) == 0.5);
  // no usable pairs
  CHECK_THROWS_AS(c_index({1, 2}, {1, 2}, {0, 0}), UndefinedMetricError);
}

TEST_CASE("ipcw_brier matches the independent oracle on random instances") {
  Rng rng(66);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 5 + rng.uniform_int(60);
    std::vector<double> t(n);
    std::vector<uint8_t> e(n);
    std::vector<StepFunction> curves;
    for (int i = 0; i < n; ++i) {
      t[i] = 0.25 * (1 + rng.uniform_int(16));
      e[i] = rng.uniform() < 0.6 ? 1 : 0;
      StepFunction s;  // random exponential-ish survival curve
      const double rate = rng.uniform(0.1, 1.0);
      s.left_value = 1.0;
      for (double k = 0.5; k <= 5.0; k += 0.5) {
        s.knots.push_back(k);
        s.values.push_back(std::exp(-rate * k));
      }
      curves.push_back(std::move(s));
    }
    std::vector<int> cf(n);
    for (int i = 0; i < n; ++i) cf[i] = e[i] ? 0 : 1;
    const StepFunction g = kaplan_meier(t, cf);
    const double horizon = 0.25 * (1 + rng.uniform_int(12));
    if (g(horizon) <= 0.0) continue;  // weights undefined; covered below
    const double fast = ipcw_brier(curves, t, e, horizon, g);
    const double naive = naive_brier(curves, t, e, horizon, g);
    REQUIRE(fast == doctest::Approx(naive).epsilon(1e-10));
  }
}

TEST_CASE("ipcw_brier refuses zero censoring weights") {
  StepFunction g;  // G hits zero at t = 1
  g.left_value = 1.0;
  g.knots = {1.0};
  g.values = {0.0};
  std::vector<StepFunction> curves(2);
  CHECK_THROWS_AS(ipcw_brier(curves, {0.5, 2.0}, {1, 1}, 1.5, g),
                  DegenerateWeightsError);
}

TEST_CASE("integrated_brier on constant and linear ramps") {
  std::vector<double> t, c, ramp;
  for (int i = 0; i <= 100; ++i) {
    t.push_back(i * 0.1);
    c.push_back(0.17);
    ramp.push_back(i * 0.1 / 10.0);
  }
  CHECK(integrated_brier(t, c, 10.0) == doctest::Approx(0.17).epsilon(1e-12));
  CHECK(integrated_brier(t, ramp, 10.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(integrated_brier({1.0}, {0.5}, 10.0), InvalidArgumentError);
  CHECK_THROWS_AS(integrated_brier({2.0, 1.0}, {0.5, 0.5}, 10.0),
                  InvalidArgumentError);
}

TEST_CASE("integrated_brier is stable under grid refinement on a smooth curve") {
  auto grid = [](int points) {
    std::vector<double> t(points), b(points);
    for (int i = 0; i < points; ++i) {
      t[i] = 5.0 * i / (points - 1);
      b[i] = 0.25 * (1.0 - std::exp(-t[i]));
    }
    return integrated_brier(t, b, 5.0);
  };
  CHECK(std::abs(grid(100) - grid(1000)) < 1e-3);
}

TEST_CASE("follow_up_percentiles matches frozen type-7 reference values") {
  // Frozen from an independent numerics package (linear-interpolation
  // quantiles) for {3.1,0.4,7.7,2.2,9.9,5.5,1.1,8.8,6.6,4.4}.
  const std::vector<double> q = follow_up_percentiles(
      {3.1, 0.4, 7.7, 2.2, 9.9, 5.5, 1.1, 8.8, 6.6, 4.4});
  REQUIRE(q.size() == 3);
  CHECK(q[0] == doctest::Approx(2.4250000000000003).epsilon(1e-14));
  CHECK(q[1] == doctest::Approx(4.95).epsilon(1e-14));
  CHECK(q[2] == doctest::Approx(7.425).epsilon(1e-14));
}

TEST_CASE("format_eval_report is a stable flat key=value rendering") {
  EvalReport rep;
  rep.c_index_integrated = 0.625;
  rep.c_index_at[2.0] = 0.6;
  rep.brier_at[2.0] = 0.125;
  rep.ibs = 0.1;
  rep.horizons = {2.0};
  rep.n_pairs_used = 42;
  rep.seed = 7;
  rep.config_fingerprint = "test";
  const std::string text = format_eval_report(rep);
  CHECK(text.find("c_index_integrated=0.625") != std::string::npos);
  CHECK(text.find("n_pairs_used=42") != std::string::npos);
  CHECK(text.find("seed=7") != std::string::npos);
  CHECK(text == format_eval_report(rep));
}

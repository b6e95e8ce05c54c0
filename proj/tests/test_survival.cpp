#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "doctest.h"
#include "fact/errors.hpp"
#include "fact/rng.hpp"
#include "fact/survival.hpp"

using namespace fact;

namespace {

// Independent product-limit oracle: walks every distinct time, counts the
// risk set by brute force.
StepFunction naive_km(const std::vector<double>& t, const std::vector<int>& e) {
  std::vector<double> times = t;
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  StepFunction s;
  s.left_value = 1.0;
  double surv = 1.0;
  for (double tj : times) {
    int at_risk = 0, deaths = 0;
    for (size_t i = 0; i < t.size(); ++i) {
      if (t[i] >= tj) ++at_risk;
      if (t[i] == tj && e[i] == 1) ++deaths;
    }
    if (deaths == 0) continue;
    surv *= 1.0 - static_cast<double>(deaths) / at_risk;
    s.knots.push_back(tj);
    s.values.push_back(surv);
  }
  return s;
}

}  // namespace

TEST_CASE("kaplan_meier matches the naive oracle on 200 random instances") {
  Rng rng(101);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 1 + rng.uniform_int(60);
    std::vector<double> t(n);
    std::vector<int> e(n);
    for (int i = 0; i < n; ++i) {
      // coarse grid forces heavy ties
      t[i] = (1 + rng.uniform_int(12)) * 0.5;
      e[i] = rng.uniform() < 0.7 ? 1 : 0;
    }
    const StepFunction a = kaplan_meier(t, e);
    const StepFunction b = naive_km(t, e);
    REQUIRE(a.knots == b.knots);
    REQUIRE(a.values.size() == b.values.size());
    for (size_t k = 0; k < a.values.size(); ++k)
      REQUIRE(a.values[k] == doctest::Approx(b.values[k]).epsilon(1e-12));
  }
}

TEST_CASE("kaplan_meier hand-worked example") {
  // t = {1,2,2,3,4}, events = {1,0,1,1,0}:
  // S(1) = 4/5; at t=2 risk 4, d=1 -> 4/5 * 3/4 = 3/5; at t=3 risk 2,
  // d=1 -> 3/5 * 1/2 = 3/10.
  const StepFunction s = kaplan_meier({1, 2, 2, 3, 4}, {1, 0, 1, 1, 0});
  REQUIRE(s.knots == std::vector<double>{1, 2, 3});
  CHECK(s.values[0] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(s.values[1] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(s.values[2] == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(s(0.999) == 1.0);
}

TEST_CASE("kaplan_meier with all events censored is flat at 1") {
  const StepFunction s = kaplan_meier({1, 2, 3}, {0, 0, 0});
  CHECK(s.knots.empty());
  CHECK(s(10.0) == 1.0);
}

TEST_CASE("log-rank on identical groups is ~0, on separated groups rejects") {
  Rng rng(5);
  std::vector<double> g(2000);
  std::vector<int> e(2000, 1);
  for (auto& v : g) v = rng.exponential(1.0);
  const LogRankResult same = logrank_test(g, e, g, e);
  CHECK(same.chi2 < 1e-9);
  CHECK(same.p_value > 0.999);

  // hazard ratio 2: group b ~ Exp(2)
  std::vector<double> b(2000);
  for (auto& v : b) v = rng.exponential(2.0);
  const LogRankResult diff = logrank_test(g, e, b, e);
  CHECK(diff.chi2 > 6.6349);
  CHECK(diff.p_value < 0.01);
}

TEST_CASE("log-rank degenerate inputs raise") {
  std::vector<double> t{1, 2, 3};
  std::vector<int> none{0, 0, 0};
  std::vector<int> all{1, 1, 1};
  CHECK_THROWS_AS(logrank_test(t, none, t, none), DegenerateTestError);
}

TEST_CASE("calendar helpers agree with known dates") {
  // 2020-01-01 00:00:00 UTC = 1577836800, a Wednesday.
  CHECK(hour_of_day(1577836800) == 0);
  CHECK(day_of_week(1577836800) == 3);
  CHECK(month_of_year(1577836800) == 1);
  // 1970-01-01 was a Thursday.
  CHECK(day_of_week(0) == 4);
  // 2020-07-04 13:30 UTC = 1593869400, a Saturday.
  CHECK(hour_of_day(1593869400) == 13);
  CHECK(day_of_week(1593869400) == 6);
  CHECK(month_of_year(1593869400) == 7);
}

TEST_CASE("stratify partitions every event exactly once") {
  std::vector<IdleEvent> events;
  Rng rng(9);
  for (int i = 0; i < 500; ++i) {
    IdleEvent e;
    e.driver_id = "d";
    e.duration = 1 + rng.uniform();
    e.event = 1;
    e.wall_clock_start = 1577836800 + rng.uniform_int(86400 * 7);
    e.covariates = {rng.uniform(0, 10), rng.uniform(0, 100)};
    events.push_back(e);
  }
  const std::vector<std::string> names{"distance_downtown", "shift_earnings"};
  for (const std::string rule :
       {"time_of_day", "day_of_week", "fare", "requests_skip",
        "distance_downtown", "covariate:shift_earnings:50"}) {
    if (rule == "requests_skip") continue;  // needs shift_orders covariate
    const auto groups = stratify(events, rule, names);
    size_t total = 0;
    std::vector<char> seen(events.size(), 0);
    for (const auto& [label, idx] : groups) {
      total += idx.size();
      for (size_t i : idx) {
        REQUIRE(!seen[i]);
        seen[i] = 1;
      }
    }
    CHECK(total == events.size());
  }
  CHECK(stratify(events, "time_of_day", names).size() == 4);
  CHECK_THROWS_AS(stratify(events, "no_such_rule", names),
                  InvalidArgumentError);
}

#include "fact/survival.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "fact/errors.hpp"
#include "fact/special.hpp"

namespace fact {
namespace {

void check_surv_input(const std::vector<double>& durations,
                      const std::vector<int>& events, const char* who) {
  if (durations.empty())
    throw InvalidArgumentError(std::string(who) + ": empty input");
  if (durations.size() != events.size())
    throw InvalidArgumentError(std::string(who) +
                               ": durations/events length mismatch");
  for (size_t i = 0; i < durations.size(); ++i) {
    if (!(durations[i] >= 0.0))
      throw InvalidArgumentError(std::string(who) + ": negative duration at " +
                                 std::to_string(i));
    if (events[i] != 0 && events[i] != 1)
      throw InvalidArgumentError(std::string(who) + ": event not in {0,1} at " +
                                 std::to_string(i));
  }
}

}  // namespace

StepFunction kaplan_meier(const std::vector<double>& durations,
                          const std::vector<int>& events) {
  check_surv_input(durations, events, "kaplan_meier");
  const size_t n = durations.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return durations[a] < durations[b]; });

  StepFunction sf;
  sf.left_value = 1.0;
  double surv = 1.0;
  size_t at_risk = n;
  size_t i = 0;
  while (i < n) {
    const double t = durations[order[i]];
    size_t d = 0, group = 0;
    while (i + group < n && durations[order[i + group]] == t) {
      d += static_cast<size_t>(events[order[i + group]]);
      ++group;
    }
    if (d > 0) {
      surv *= 1.0 - static_cast<double>(d) / static_cast<double>(at_risk);
      sf.knots.push_back(t);
      sf.values.push_back(surv);
    }
    at_risk -= group;
    i += group;
  }
  return sf;
}

LogRankResult logrank_test(const std::vector<double>& durations_a,
                           const std::vector<int>& events_a,
                           const std::vector<double>& durations_b,
                           const std::vector<int>& events_b) {
  check_surv_input(durations_a, events_a, "logrank_test(group A)");
  check_surv_input(durations_b, events_b, "logrank_test(group B)");

  const long total_events =
      std::accumulate(events_a.begin(), events_a.end(), 0L) +
      std::accumulate(events_b.begin(), events_b.end(), 0L);
  if (total_events == 0)
    throw DegenerateTestError("logrank_test: zero events in both groups");

  // Sorted copies; risk-set sizes via binary search, event counts by scan.
  struct Obs {
    double t;
    int d;
  };
  auto collect = [](const std::vector<double>& ts, const std::vector<int>& ds) {
    std::vector<Obs> v(ts.size());
    for (size_t i = 0; i < ts.size(); ++i) v[i] = {ts[i], ds[i]};
    std::sort(v.begin(), v.end(),
              [](const Obs& x, const Obs& y) { return x.t < y.t; });
    return v;
  };
  const std::vector<Obs> a = collect(durations_a, events_a);
  const std::vector<Obs> b = collect(durations_b, events_b);

  // Pooled distinct event times.
  std::vector<double> times;
  for (const auto& o : a)
    if (o.d) times.push_back(o.t);
  for (const auto& o : b)
    if (o.d) times.push_back(o.t);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  auto at_risk = [](const std::vector<Obs>& g, double t) {
    const auto it = std::lower_bound(
        g.begin(), g.end(), t,
        [](const Obs& o, double tt) { return o.t < tt; });
    return static_cast<double>(g.end() - it);
  };
  auto events_at = [](const std::vector<Obs>& g, double t) {
    auto it = std::lower_bound(g.begin(), g.end(), t,
                               [](const Obs& o, double tt) { return o.t < tt; });
    double d = 0;
    for (; it != g.end() && it->t == t; ++it) d += it->d;
    return d;
  };

  double o_minus_e = 0.0, var = 0.0;
  for (double t : times) {
    const double na = at_risk(a, t);
    const double nb = at_risk(b, t);
    const double nj = na + nb;
    if (nj <= 0) continue;
    const double da = events_at(a, t);
    const double dj = da + events_at(b, t);
    const double ea = dj * na / nj;
    o_minus_e += da - ea;
    if (nj > 1.0)
      var += dj * (na / nj) * (1.0 - na / nj) * (nj - dj) / (nj - 1.0);
  }
  if (var <= 0.0)
    throw DegenerateTestError("logrank_test: zero variance (degenerate test)");

  LogRankResult r;
  r.chi2 = o_minus_e * o_minus_e / var;
  r.p_value = chi_square_1df_sf(r.chi2);
  return r;
}

int hour_of_day(int64_t epoch_seconds) {
  int64_t s = epoch_seconds % 86400;
  if (s < 0) s += 86400;
  return static_cast<int>(s / 3600);
}

int day_of_week(int64_t epoch_seconds) {
  int64_t day = epoch_seconds / 86400;
  if (epoch_seconds % 86400 < 0) --day;
  return static_cast<int>(((day % 7) + 7 + 4) % 7);  // epoch day 0 = Thursday
}

int month_of_year(int64_t epoch_seconds) {
  // Civil-from-days (Hinnant's algorithm), UTC.
  int64_t z = epoch_seconds / 86400;
  if (epoch_seconds % 86400 < 0) --z;
  z += 719468;
  const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const int64_t doe = z - era * 146097;
  const int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const int64_t mp = (5 * doy + 2) / 153;
  return static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
}

namespace {

size_t feature_index(const std::vector<std::string>& names,
                     const std::string& want, const std::string& rule) {
  for (size_t i = 0; i < names.size(); ++i)
    if (names[i] == want) return i;
  throw InvalidArgumentError("stratify: rule '" + rule +
                             "' needs covariate '" + want +
                             "' which is not among the feature names");
}

}  // namespace

std::map<std::string, std::vector<size_t>> stratify(
    const std::vector<IdleEvent>& events, const std::string& rule,
    const std::vector<std::string>& feature_names) {
  std::map<std::string, std::vector<size_t>> groups;
  auto assign = [&](const std::string& label, size_t idx) {
    groups[label].push_back(idx);
  };

  if (rule == "time_of_day") {
    for (size_t i = 0; i < events.size(); ++i) {
      const int h = hour_of_day(events[i].wall_clock_start);
      if (h >= 5 && h < 11)
        assign("Morning (5-11am)", i);
      else if (h >= 11 && h < 17)
        assign("Afternoon (11-5pm)", i);
      else if (h >= 17 && h < 21)
        assign("Evening (5-9pm)", i);
      else
        assign("Night (9pm-5am)", i);
    }
  } else if (rule == "day_of_week") {
    for (size_t i = 0; i < events.size(); ++i)
      assign(day_of_week(events[i].wall_clock_start) == 0 ? "Sunday"
                                                          : "Non-Sunday",
             i);
  } else if (rule == "fare") {
    const size_t f = feature_index(feature_names, "shift_earnings", rule);
    for (size_t i = 0; i < events.size(); ++i) {
      const double v = events[i].covariates.at(f);
      if (v <= 0.0)
        assign("<=0", i);
      else if (v < 70.0)
        assign("0-70", i);
      else
        assign(">=70", i);
    }
  } else if (rule == "requests") {
    const size_t f = feature_index(feature_names, "shift_orders", rule);
    for (size_t i = 0; i < events.size(); ++i) {
      const double v = events[i].covariates.at(f);
      if (v < 1.0)
        assign("<1", i);
      else if (v < 6.0)
        assign("1-6", i);
      else
        assign(">=6", i);
    }
  } else if (rule == "distance_downtown" || rule == "distance_airport") {
    const double thr = rule == "distance_downtown" ? 3.0 : 6.0;
    const size_t f = feature_index(feature_names, rule, rule);
    const std::string unit = "km";
    for (size_t i = 0; i < events.size(); ++i) {
      const double v = events[i].covariates.at(f);
      assign(v < thr ? "<" + std::to_string(static_cast<int>(thr)) + unit
                     : ">=" + std::to_string(static_cast<int>(thr)) + unit,
             i);
    }
  } else if (rule.rfind("covariate:", 0) == 0) {
    const std::string spec = rule.substr(10);
    const size_t colon = spec.find(':');
    if (colon == std::string::npos)
      throw InvalidArgumentError(
          "stratify: expected covariate:<name>:<threshold>, got '" + rule +
          "'");
    const std::string name = spec.substr(0, colon);
    double thr;
    try {
      thr = std::stod(spec.substr(colon + 1));
    } catch (const std::exception&) {
      throw InvalidArgumentError("stratify: bad threshold in '" + rule + "'");
    }
    const size_t f = feature_index(feature_names, name, rule);
    std::ostringstream lo, hi;
    lo << name << "<" << thr;
    hi << name << ">=" << thr;
    for (size_t i = 0; i < events.size(); ++i)
      assign(events[i].covariates.at(f) < thr ? lo.str() : hi.str(), i);
  } else {
    throw InvalidArgumentError("stratify: unknown rule '" + rule + "'");
  }
  return groups;
}

}  // namespace fact

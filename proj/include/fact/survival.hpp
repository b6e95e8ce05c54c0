#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fact/step_function.hpp"

namespace fact {

// One idle interval of one driver. Covariates are raw Table-style feature
// values for stratification studies, or standardized values when feeding
// model fits; callers keep track of which.
struct IdleEvent {
  std::string driver_id;
  int seq_index = 1;  // 1-based within driver
  std::vector<double> covariates;
  double duration = 0.0;  // minutes
  int event = 0;          // 1 = log-off observed, 0 = censored by a trip
  int64_t wall_clock_start = 0;  // seconds since epoch
};

// Product-limit survival estimator. Knots at distinct event times; at each
// event time t_j the curve multiplies by (1 - d_j / n_j). Censored
// observations shrink the risk set only. Ties between an event and a
// censoring at the same time keep the censored subject at risk for that
// time (events-before-censoring convention).
StepFunction kaplan_meier(const std::vector<double>& durations,
                          const std::vector<int>& events);

struct LogRankResult {
  double chi2 = 0.0;
  double p_value = 1.0;
};

// Standard two-sample log-rank test over the pooled distinct event times.
// The test assumes independent samples; with recurrent events per driver
// the within-driver correlation makes the nominal p-value optimistic.
LogRankResult logrank_test(const std::vector<double>& durations_a,
                           const std::vector<int>& events_a,
                           const std::vector<double>& durations_b,
                           const std::vector<int>& events_b);

// Named stratification rules:
//   time_of_day        -> Morning (5-11am) / Afternoon (11-5pm) /
//                         Evening (5-9pm) / Night (9pm-5am)
//   day_of_week        -> Non-Sunday / Sunday
//   fare               -> <=0 / 0-70 / >=70   (on shift_earnings)
//   requests           -> <1 / 1-6 / >=6      (on shift_orders)
//   distance_downtown  -> <3km / >=3km
//   distance_airport   -> <6km / >=6km
//   covariate:<name>:<threshold>  -> < / >= user threshold
// Bins are closed on the left, open on the right; the "<=0" fare bin is
// closed on both sides. Returns a partition: indices into `events`, every
// event assigned exactly once.
std::map<std::string, std::vector<size_t>> stratify(
    const std::vector<IdleEvent>& events, const std::string& rule,
    const std::vector<std::string>& feature_names);

// Hour of day / day of week (0 = Sunday) from epoch seconds, UTC.
int hour_of_day(int64_t epoch_seconds);
int day_of_week(int64_t epoch_seconds);
int month_of_year(int64_t epoch_seconds);

}  // namespace fact

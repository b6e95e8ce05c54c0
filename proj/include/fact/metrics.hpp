#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fact/step_function.hpp"

namespace fact {

struct EvalReport {
  double c_index_integrated = 0.0;
  std::map<double, double> c_index_at;  // horizon -> value
  std::map<double, double> brier_at;
  double ibs = 0.0;
  std::vector<double> horizons;  // 25/50/75% follow-up percentiles
  int64_t n_pairs_used = 0;
  uint64_t seed = 0;
  std::string config_fingerprint;
};

// Harrell's concordance over all usable pairs (T_i < T_j with delta_i = 1);
// risk ties contribute 0.5.
double c_index(const std::vector<double>& risks,
               const std::vector<double>& durations,
               const std::vector<uint8_t>& events,
               int64_t* n_pairs = nullptr);

// Concordance restricted to pairs whose earlier member's event occurs by
// the horizon.
double c_index_truncated(const std::vector<double>& risks,
                         const std::vector<double>& durations,
                         const std::vector<uint8_t>& events, double horizon,
                         int64_t* n_pairs = nullptr);

// IPCW (Graf) Brier score at `horizon`. `censor_km` is the Kaplan-Meier
// estimate of the censoring distribution G (indicators flipped); it is
// evaluated with left limits at event times. Subjects censored before the
// horizon contribute zero.
double ipcw_brier(const std::vector<StepFunction>& survival_curves,
                  const std::vector<double>& durations,
                  const std::vector<uint8_t>& events, double horizon,
                  const StepFunction& censor_km);

// Time-averaged Brier score: trapezoidal integral of the sampled curve
// divided by the span of the sample grid. With a grid spanning [0, tau]
// this is exactly the (1/tau) integral form.
double integrated_brier(const std::vector<double>& times,
                        const std::vector<double>& brier_values, double tau);

// Empirical quantiles (type-7 linear interpolation) of observed durations,
// events and censorings pooled.
std::vector<double> follow_up_percentiles(
    const std::vector<double>& durations,
    const std::vector<double>& qs = {0.25, 0.5, 0.75});

std::string format_eval_report(const EvalReport& report);

}  // namespace fact

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fact/data.hpp"

namespace fact {

// Ground-truth driver-behavior simulator. Each driver alternates idle and
// trip cycles; during an idle spell the log-off hazard is
//   h0(t) * exp(beta' X + history_coef * H + g_i)
// with Weibull h0 and a competing exponential trip-arrival process (trip
// first => censored). H is a recency-weighted sum of the driver's past
// idle durations: H_k = sum_{j<k} rho^{k-1-j} T_j / history_scale, which
// is observable only through the event history, not through the target
// covariates alone.
struct SynthConfig {
  int n_drivers = 100;
  double horizon_days = 7.0;
  double frailty_sd = 0.0;  // sd of the per-driver log-risk offset g_i
  std::map<std::string, double> beta;  // feature name -> effect on raw value
  double history_coef = 0.0;
  double history_decay = 0.8;
  double history_scale = 30.0;  // minutes
  double trip_rate = 0.06;      // competing trip arrivals per minute
  double weibull_shape = 1.3;
  double weibull_scale = 25.0;  // minutes
  uint64_t seed = 1;
};

struct GroundTruth {
  SynthConfig config;
  std::vector<std::string> driver_ids;
  std::vector<double> frailty;  // g_i per driver
};

struct SynthResult {
  std::vector<RawRecord> records;
  GroundTruth truth;
};

SynthResult synth_generate(const SynthConfig& config);

void save_ground_truth(const std::string& path, const GroundTruth& truth);

}  // namespace fact

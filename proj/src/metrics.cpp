#include "fact/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fact/errors.hpp"

namespace fact {

namespace {

void check_aligned(const std::vector<double>& risks,
                   const std::vector<double>& durations,
                   const std::vector<uint8_t>& events, const char* who) {
  if (risks.empty()) throw InvalidArgumentError(std::string(who) + ": empty input");
  if (risks.size() != durations.size() || risks.size() != events.size())
    throw InvalidArgumentError(std::string(who) + ": length mismatch");
}

double c_index_impl(const std::vector<double>& risks,
                    const std::vector<double>& durations,
                    const std::vector<uint8_t>& events, double horizon,
                    int64_t* n_pairs, const char* who) {
  check_aligned(risks, durations, events, who);
  const size_t n = risks.size();
  double concordant = 0.0;
  int64_t usable = 0;
  for (size_t i = 0; i < n; ++i) {
    if (!events[i] || durations[i] > horizon) continue;
    for (size_t j = 0; j < n; ++j) {
      if (durations[i] >= durations[j]) continue;
      ++usable;
      if (risks[i] > risks[j])
        concordant += 1.0;
      else if (risks[i] == risks[j])
        concordant += 0.5;
    }
  }
  if (n_pairs) *n_pairs = usable;
  if (usable == 0)
    throw UndefinedMetricError(std::string(who) + ": no usable pairs");
  return concordant / static_cast<double>(usable);
}

}  // namespace

double c_index(const std::vector<double>& risks,
               const std::vector<double>& durations,
               const std::vector<uint8_t>& events, int64_t* n_pairs) {
  return c_index_impl(risks, durations, events,
                      std::numeric_limits<double>::infinity(), n_pairs,
                      "c_index");
}

double c_index_truncated(const std::vector<double>& risks,
                         const std::vector<double>& durations,
                         const std::vector<uint8_t>& events, double horizon,
                         int64_t* n_pairs) {
  if (!(horizon > 0.0))
    throw InvalidArgumentError("c_index_truncated: horizon must be > 0");
  return c_index_impl(risks, durations, events, horizon, n_pairs,
                      "c_index_truncated");
}

double ipcw_brier(const std::vector<StepFunction>& survival_curves,
                  const std::vector<double>& durations,
                  const std::vector<uint8_t>& events, double horizon,
                  const StepFunction& censor_km) {
  const size_t n = durations.size();
  if (n == 0) throw InvalidArgumentError("ipcw_brier: empty input");
  if (survival_curves.size() != n || events.size() != n)
    throw InvalidArgumentError("ipcw_brier: length mismatch");
  double sum = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double s = survival_curves[i](horizon);
    if (durations[i] <= horizon && events[i]) {
      const double g = censor_km.eval_left(durations[i]);
      if (g <= 0.0)
        throw DegenerateWeightsError(
            "ipcw_brier: censoring survival is 0 at t = " +
            std::to_string(durations[i]));
      sum += s * s / g;  // observed state at the horizon is "event occurred"
    } else if (durations[i] > horizon) {
      const double g = censor_km(horizon);
      if (g <= 0.0)
        throw DegenerateWeightsError(
            "ipcw_brier: censoring survival is 0 at horizon t = " +
            std::to_string(horizon));
      sum += (1.0 - s) * (1.0 - s) / g;  // still surviving at the horizon
    }
    // censored before the horizon: weight 0
  }
  return sum / static_cast<double>(n);
}

double integrated_brier(const std::vector<double>& times,
                        const std::vector<double>& brier_values, double tau) {
  if (!(tau > 0.0)) throw InvalidArgumentError("integrated_brier: tau <= 0");
  if (times.size() < 2 || times.size() != brier_values.size())
    throw InvalidArgumentError(
        "integrated_brier: need >= 2 aligned sample points");
  for (size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1]))
      throw InvalidArgumentError("integrated_brier: times must increase");
  if (times.front() < 0.0 || times.back() > tau + 1e-12)
    throw InvalidArgumentError("integrated_brier: samples outside [0, tau]");
  double integral = 0.0;
  for (size_t i = 1; i < times.size(); ++i)
    integral += 0.5 * (brier_values[i] + brier_values[i - 1]) *
                (times[i] - times[i - 1]);
  return integral / (times.back() - times.front());
}

std::vector<double> follow_up_percentiles(const std::vector<double>& durations,
                                          const std::vector<double>& qs) {
  if (durations.empty())
    throw InvalidArgumentError("follow_up_percentiles: empty input");
  std::vector<double> sorted = durations;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> out;
  out.reserve(qs.size());
  for (double q : qs) {
    const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
    const size_t lo = static_cast<size_t>(std::floor(h));
    const size_t hi = std::min(lo + 1, sorted.size() - 1);
    out.push_back(sorted[lo] + (h - std::floor(h)) * (sorted[hi] - sorted[lo]));
  }
  return out;
}

std::string format_eval_report(const EvalReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << "format_version=1\n";
  os << "c_index_integrated=" << r.c_index_integrated << "\n";
  int pct = 25;
  for (double h : r.horizons) {
    os << "horizon_" << pct << "=" << h << "\n";
    pct += 25;
  }
  pct = 25;
  for (double h : r.horizons) {
    auto it = r.c_index_at.find(h);
    if (it != r.c_index_at.end())
      os << "c_index_at_" << pct << "=" << it->second << "\n";
    pct += 25;
  }
  pct = 25;
  for (double h : r.horizons) {
    auto it = r.brier_at.find(h);
    if (it != r.brier_at.end())
      os << "brier_at_" << pct << "=" << it->second << "\n";
    pct += 25;
  }
  os << "ibs=" << r.ibs << "\n";
  os << "n_pairs_used=" << r.n_pairs_used << "\n";
  os << "seed=" << r.seed << "\n";
  os << "config_fingerprint=" << r.config_fingerprint << "\n";
  return os.str();
}

}  // namespace fact

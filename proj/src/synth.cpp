#include "fact/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fact/errors.hpp"
#include "fact/rng.hpp"

namespace fact {

namespace {

constexpr double kDowntownLon = -79.3832, kDowntownLat = 43.6532;
constexpr double kAirportLon = -79.6248, kAirportLat = 43.6777;

double planar_km(double lon, double lat, double lon0, double lat0) {
  const double kx = 111.0 * std::cos(lat0 * M_PI / 180.0);
  const double dx = (lon - lon0) * kx;
  const double dy = (lat - lat0) * 111.0;
  return std::sqrt(dx * dx + dy * dy);
}

std::string driver_name(int i) {
  std::ostringstream os;
  os << "d";
  os.width(5);
  os.fill('0');
  os << i;
  return os.str();
}

}  // namespace

SynthResult synth_generate(const SynthConfig& cfg) {
  if (cfg.n_drivers < 1)
    throw InvalidArgumentError("synth_generate: n_drivers must be >= 1");
  if (!(cfg.trip_rate > 0.0) || !(cfg.weibull_scale > 0.0) ||
      !(cfg.weibull_shape > 0.0) || !(cfg.horizon_days > 0.0))
    throw InvalidArgumentError("synth_generate: rates/scales must be positive");
  for (const auto& [name, coef] : cfg.beta)
    (void)feature_group(name);  // validates the name

  const Rng root(cfg.seed);
  const int64_t horizon_s =
      static_cast<int64_t>(cfg.horizon_days * 86400.0);
  // Jan 2 2020 00:00 UTC, matching the study period's calendar context.
  const int64_t t0 = 1577923200;

  SynthResult out;
  out.truth.config = cfg;

  const std::vector<int> all_idx = [] {
    std::vector<int> idx(all_feature_names().size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    return idx;
  }();

  for (int i = 0; i < cfg.n_drivers; ++i) {
    Rng rng = root.split(static_cast<uint64_t>(i));
    const double g = cfg.frailty_sd > 0.0 ? rng.normal(0.0, cfg.frailty_sd) : 0.0;
    out.truth.driver_ids.push_back(driver_name(i));
    out.truth.frailty.push_back(g);

    int64_t wall = t0 + static_cast<int64_t>(rng.uniform(0.0, 43200.0));
    const int64_t end = t0 + horizon_s;
    double history = 0.0;  // decayed sum of past idle durations / scale
    double sh_earn = 0, sh_orders = 0, sh_tdist = 0, sh_idist = 0,
           sh_tdur = 0, sh_idur = 0;

    while (wall < end) {
      RawRecord r;
      r.timestamp = wall;
      r.driver_id = driver_name(i);
      r.start_longitude = kDowntownLon + rng.normal(0.0, 0.08);
      r.start_latitude = kDowntownLat + rng.normal(0.0, 0.05);
      r.distance_downtown =
          planar_km(r.start_longitude, r.start_latitude, kDowntownLon, kDowntownLat);
      r.distance_airport =
          planar_km(r.start_longitude, r.start_latitude, kAirportLon, kAirportLat);
      r.shift_earnings = sh_earn;
      r.shift_orders = sh_orders;
      r.shift_trip_distance = sh_tdist;
      r.shift_idle_distance = sh_idist;
      r.shift_trip_duration = sh_tdur;
      r.shift_idle_duration = sh_idur;
      r.temperature = -2.0 + rng.normal(0.0, 5.0);
      r.precipitation = rng.uniform() < 0.25 ? rng.exponential(0.5) : 0.0;
      r.snowfall = rng.uniform() < 0.15 ? rng.exponential(1.0) : 0.0;
      r.snow_depth = std::max(0.0, 0.05 + rng.normal(0.0, 0.04));

      // linear predictor on raw feature values
      double eta = cfg.history_coef * history + g;
      if (!cfg.beta.empty()) {
        const std::vector<double> feats = build_features(r, all_idx);
        const auto& names = all_feature_names();
        for (const auto& [name, coef] : cfg.beta) {
          const auto it = std::find(names.begin(), names.end(), name);
          eta += coef * feats[static_cast<size_t>(it - names.begin())];
        }
      }

      // competing risks: Weibull PH log-off vs exponential trip arrival
      const double u = std::max(rng.uniform(), 1e-300);
      const double t_logoff =
          cfg.weibull_scale *
          std::pow(-std::log(u) / std::exp(eta), 1.0 / cfg.weibull_shape);
      const double t_trip = rng.exponential(cfg.trip_rate);
      const bool logoff = t_logoff <= t_trip;
      // minute-resolution-ish durations: round to 0.1 min, floor at 0.1
      double dur = std::min(t_logoff, t_trip);
      dur = std::max(0.1, std::round(dur * 10.0) / 10.0);
      r.idle_duration = dur;
      r.logoff = logoff;
      out.records.push_back(r);

      history = cfg.history_decay * (history + dur / cfg.history_scale);
      sh_idur += dur;
      sh_idist += dur * 0.2;
      wall += static_cast<int64_t>(std::llround(dur * 60.0));

      if (logoff) {
        // off-platform gap, mean 6 hours, then a fresh shift
        wall += static_cast<int64_t>(
            std::llround(rng.exponential(1.0 / 360.0) * 60.0));
        sh_earn = sh_orders = sh_tdist = sh_idist = sh_tdur = sh_idur = 0;
      } else {
        const double trip_dur = std::exp(rng.normal(2.5, 0.5));  // minutes
        const double trip_dist = trip_dur * rng.uniform(0.4, 0.8);
        sh_earn += 3.0 + 1.5 * trip_dist + 0.35 * trip_dur;
        sh_orders += 1;
        sh_tdist += trip_dist;
        sh_tdur += trip_dur;
        wall += static_cast<int64_t>(std::llround(trip_dur * 60.0));
      }
    }
  }
  return out;
}

void save_ground_truth(const std::string& path, const GroundTruth& truth) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write '" + path + "'");
  os.precision(17);
  const auto& c = truth.config;
  os << "format_version=1\n";
  os << "n_drivers=" << c.n_drivers << "\n";
  os << "horizon_days=" << c.horizon_days << "\n";
  os << "frailty_sd=" << c.frailty_sd << "\n";
  os << "history_coef=" << c.history_coef << "\n";
  os << "history_decay=" << c.history_decay << "\n";
  os << "history_scale=" << c.history_scale << "\n";
  os << "trip_rate=" << c.trip_rate << "\n";
  os << "weibull_shape=" << c.weibull_shape << "\n";
  os << "weibull_scale=" << c.weibull_scale << "\n";
  os << "seed=" << c.seed << "\n";
  for (const auto& [name, coef] : c.beta)
    os << "beta." << name << "=" << coef << "\n";
  for (size_t i = 0; i < truth.driver_ids.size(); ++i)
    os << "frailty." << truth.driver_ids[i] << "=" << truth.frailty[i] << "\n";
}

}  // namespace fact

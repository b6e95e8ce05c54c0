#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "fact/survival.hpp"

namespace fact {

// One raw idle-event row. `logoff` true means the idle period ended with a
// voluntary log-off (event, delta = 1); false means a trip interrupted it
// (censored, delta = 0).
struct RawRecord {
  int64_t timestamp = 0;  // seconds since epoch
  double start_longitude = 0, start_latitude = 0;
  double distance_downtown = 0, distance_airport = 0;  // km
  double shift_earnings = 0;                           // CAD
  double shift_orders = 0;
  double shift_trip_distance = 0, shift_idle_distance = 0;  // km
  double shift_trip_duration = 0, shift_idle_duration = 0;  // min
  double temperature = 0;                                   // C
  double precipitation = 0, snowfall = 0;                   // mm
  double snow_depth = 0;                                    // m
  std::string driver_id;
  double idle_duration = 0;  // min
  bool logoff = false;       // outcome column: "logoff" or "trip"
};

// Reads and validates the CSV contract. Columns are matched by header name;
// any order is accepted, missing columns are schema errors. Records come
// back sorted per driver by timestamp; out-of-order timestamps within a
// driver are an error.
std::vector<RawRecord> ingest_csv(const std::string& path);
void write_csv(const std::string& path, const std::vector<RawRecord>& records);

// (sin(2*pi*v/P), cos(2*pi*v/P))
std::pair<double, double> cyclical_encode(double v, double period);

// ---- model features ------------------------------------------------------

enum class FeatureGroup { temporal, spatial, workshift, weather };

// The full derived feature vector (p = 19): cyclical temporal encodings,
// spatial coordinates/distances, workshift cumulants, weather.
const std::vector<std::string>& all_feature_names();
FeatureGroup feature_group(const std::string& name);

// Indices into all_feature_names() for the enabled groups, in canonical
// order.
std::vector<int> selected_features(const std::set<FeatureGroup>& groups);

std::vector<double> build_features(const RawRecord& rec,
                                   const std::vector<int>& selected);

// Raw-covariate IdleEvents for KM / stratification studies.
std::vector<IdleEvent> to_idle_events(const std::vector<RawRecord>& records,
                                      const std::vector<int>& selected);

// ---- standardization -----------------------------------------------------

// Per-feature mean / population standard deviation fit on training rows
// only. Constant features pass through with sd treated as 1.
struct Scaler {
  std::vector<double> mean, sd;
  std::vector<uint8_t> constant;  // 1 = degenerate sd, passed through

  std::vector<double> apply(const std::vector<double>& row) const;
};

Scaler fit_scaler(const std::vector<std::vector<double>>& rows);

// ---- windows ---------------------------------------------------------------

// A fixed-length sequence of (covariates, past outcome) pairs. Row t of
// `seq` is [x_t standardized, T_t standardized, delta_t]; the last row's
// outcome pair is (0, 0). Left-padded rows are all-zero with pad_mask set.
struct WindowSample {
  std::string driver_id;
  int driver_index = -1;  // index into WindowSet::driver_ids
  int64_t target_wall_clock = 0;
  std::vector<double> seq;       // L x (p + 2), row-major
  std::vector<uint8_t> pad_mask;  // L entries; 1 = padded
  double label_duration = 0.0;    // raw minutes
  uint8_t label_event = 0;
};

struct WindowSet {
  int lookback = 0;   // h: historical events per window
  int seq_len = 1;    // L = h + 1 (target included)
  int input_dim = 0;  // p + 2
  std::vector<std::string> feature_names;
  std::vector<std::string> driver_ids;
  std::vector<WindowSample> samples;

  std::vector<double> label_durations() const;
  std::vector<uint8_t> label_events() const;
};

// Standardized event stream of one driver, time-ordered.
struct DriverHistory {
  std::string driver_id;
  std::vector<std::vector<double>> features;  // standardized
  std::vector<double> duration_std;           // standardized durations
  std::vector<double> duration_raw;
  std::vector<uint8_t> event;
  std::vector<int64_t> wall_clock;
};

// Sliding windows over one driver's history. Without padding this yields
// N - L + 1 samples; with left padding every event becomes a target (N
// samples).
std::vector<WindowSample> build_windows(const DriverHistory& history, int seq_len,
                                        bool left_pad = true);

// Sorts windows by target wall clock (stable tie-break by driver then
// order) and splits floor(f1*M) / floor(f2*M) / remainder.
struct SplitWindows {
  WindowSet train, val, test;
};
SplitWindows chronological_split(const WindowSet& windows, double train_frac,
                                 double val_frac, double test_frac);

// ---- end-to-end prep -------------------------------------------------------

struct PrepResult {
  Scaler feature_scaler;
  double duration_mean = 0.0, duration_sd = 1.0;
  WindowSet train, val, test;
};

// records -> features -> chronological split boundary -> scaler fit on the
// training period -> standardized windows per split. The scaler never sees
// validation/test targets.
PrepResult prep_pipeline(const std::vector<RawRecord>& records, int lookback,
                         const std::set<FeatureGroup>& groups,
                         double train_frac = 0.70, double val_frac = 0.15,
                         double test_frac = 0.15, bool left_pad = true);

// Binary, versioned window-cache round trip.
void save_windows(const std::string& path, const WindowSet& ws);
WindowSet load_windows(const std::string& path);

void save_scaler(const std::string& path, const PrepResult& prep);

}  // namespace fact

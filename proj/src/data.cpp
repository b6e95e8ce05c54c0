#include "fact/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "fact/errors.hpp"

namespace fact {

namespace {

const std::vector<std::string> kCsvColumns = {
    "timestamp",        "start_longitude",     "start_latitude",
    "distance_downtown", "distance_airport",   "shift_earnings",
    "shift_orders",     "shift_trip_distance", "shift_idle_distance",
    "shift_trip_duration", "shift_idle_duration", "temperature",
    "precipitation",    "snowfall",            "snow_depth",
    "driver_id",        "idle_duration",       "outcome"};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  cells.push_back(cur);
  return cells;
}

double parse_double(const std::string& s, int line_no, const std::string& col) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw SchemaError("csv line " + std::to_string(line_no) +
                      ": unparsable value '" + s + "' in column " + col);
  }
}

}  // namespace

std::vector<RawRecord> ingest_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("csv: missing header row");
  const std::vector<std::string> header = split_csv_line(line);
  std::map<std::string, size_t> col;
  for (size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const auto& want : kCsvColumns)
    if (!col.count(want)) throw SchemaError("csv: missing column " + want);

  std::vector<RawRecord> records;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() < header.size())
      throw SchemaError("csv line " + std::to_string(line_no) +
                        ": expected " + std::to_string(header.size()) +
                        " cells, got " + std::to_string(cells.size()));
    auto num = [&](const char* c) {
      return parse_double(cells[col.at(c)], line_no, c);
    };
    RawRecord r;
    r.timestamp = static_cast<int64_t>(num("timestamp"));
    r.start_longitude = num("start_longitude");
    r.start_latitude = num("start_latitude");
    r.distance_downtown = num("distance_downtown");
    r.distance_airport = num("distance_airport");
    r.shift_earnings = num("shift_earnings");
    r.shift_orders = num("shift_orders");
    r.shift_trip_distance = num("shift_trip_distance");
    r.shift_idle_distance = num("shift_idle_distance");
    r.shift_trip_duration = num("shift_trip_duration");
    r.shift_idle_duration = num("shift_idle_duration");
    r.temperature = num("temperature");
    r.precipitation = num("precipitation");
    r.snowfall = num("snowfall");
    r.snow_depth = num("snow_depth");
    r.driver_id = cells[col.at("driver_id")];
    r.idle_duration = num("idle_duration");
    if (r.idle_duration < 0)
      throw SchemaError("csv line " + std::to_string(line_no) +
                        ": negative idle_duration");
    const std::string& outcome = cells[col.at("outcome")];
    if (outcome == "logoff")
      r.logoff = true;
    else if (outcome == "trip")
      r.logoff = false;
    else
      throw SchemaError("csv line " + std::to_string(line_no) +
                        ": outcome must be 'logoff' or 'trip', got '" +
                        outcome + "'");
    records.push_back(std::move(r));
  }

  // stable per-driver ordering check, then global sort by (driver, time)
  std::map<std::string, int64_t> last_ts;
  for (const auto& r : records) {
    auto it = last_ts.find(r.driver_id);
    if (it != last_ts.end() && r.timestamp < it->second)
      throw SchemaError("csv: out-of-order timestamps within driver " +
                        r.driver_id);
    last_ts[r.driver_id] = r.timestamp;
  }
  std::stable_sort(records.begin(), records.end(),
                   [](const RawRecord& a, const RawRecord& b) {
                     if (a.driver_id != b.driver_id)
                       return a.driver_id < b.driver_id;
                     return a.timestamp < b.timestamp;
                   });
  return records;
}

void write_csv(const std::string& path, const std::vector<RawRecord>& records) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.precision(17);
  for (size_t i = 0; i < kCsvColumns.size(); ++i)
    out << (i ? "," : "") << kCsvColumns[i];
  out << "\n";
  for (const auto& r : records) {
    out << r.timestamp << "," << r.start_longitude << "," << r.start_latitude
        << "," << r.distance_downtown << "," << r.distance_airport << ","
        << r.shift_earnings << "," << r.shift_orders << ","
        << r.shift_trip_distance << "," << r.shift_idle_distance << ","
        << r.shift_trip_duration << "," << r.shift_idle_duration << ","
        << r.temperature << "," << r.precipitation << "," << r.snowfall << ","
        << r.snow_depth << "," << r.driver_id << "," << r.idle_duration << ","
        << (r.logoff ? "logoff" : "trip") << "\n";
  }
}

std::pair<double, double> cyclical_encode(double v, double period) {
  if (!(period > 0.0))
    throw InvalidArgumentError("cyclical_encode: period must be > 0");
  const double a = 2.0 * M_PI * v / period;
  return {std::sin(a), std::cos(a)};
}

const std::vector<std::string>& all_feature_names() {
  static const std::vector<std::string> names = {
      // temporal
      "hour_sine", "hour_cosine", "day_sine", "day_cosine", "month",
      // spatial
      "start_longitude", "start_latitude", "distance_downtown",
      "distance_airport",
      // workshift cumulative
      "shift_earnings", "shift_orders", "shift_trip_distance",
      "shift_idle_distance", "shift_trip_duration", "shift_idle_duration",
      // weather
      "temperature", "precipitation", "snowfall", "snow_depth"};
  return names;
}

FeatureGroup feature_group(const std::string& name) {
  static const std::map<std::string, FeatureGroup> groups = {
      {"hour_sine", FeatureGroup::temporal},
      {"hour_cosine", FeatureGroup::temporal},
      {"day_sine", FeatureGroup::temporal},
      {"day_cosine", FeatureGroup::temporal},
      {"month", FeatureGroup::temporal},
      {"start_longitude", FeatureGroup::spatial},
      {"start_latitude", FeatureGroup::spatial},
      {"distance_downtown", FeatureGroup::spatial},
      {"distance_airport", FeatureGroup::spatial},
      {"shift_earnings", FeatureGroup::workshift},
      {"shift_orders", FeatureGroup::workshift},
      {"shift_trip_distance", FeatureGroup::workshift},
      {"shift_idle_distance", FeatureGroup::workshift},
      {"shift_trip_duration", FeatureGroup::workshift},
      {"shift_idle_duration", FeatureGroup::workshift},
      {"temperature", FeatureGroup::weather},
      {"precipitation", FeatureGroup::weather},
      {"snowfall", FeatureGroup::weather},
      {"snow_depth", FeatureGroup::weather}};
  auto it = groups.find(name);
  if (it == groups.end())
    throw InvalidArgumentError("unknown feature '" + name + "'");
  return it->second;
}

std::vector<int> selected_features(const std::set<FeatureGroup>& groups) {
  if (groups.empty())
    throw InvalidArgumentError("selected_features: no feature groups enabled");
  std::vector<int> idx;
  const auto& names = all_feature_names();
  for (int i = 0; i < static_cast<int>(names.size()); ++i)
    if (groups.count(feature_group(names[i]))) idx.push_back(i);
  return idx;
}

std::vector<double> build_features(const RawRecord& r,
                                   const std::vector<int>& selected) {
  const auto [hs, hc] = cyclical_encode(hour_of_day(r.timestamp), 24.0);
  const auto [ds, dc] = cyclical_encode(day_of_week(r.timestamp), 7.0);
  const double full[] = {hs,
                         hc,
                         ds,
                         dc,
                         static_cast<double>(month_of_year(r.timestamp)),
                         r.start_longitude,
                         r.start_latitude,
                         r.distance_downtown,
                         r.distance_airport,
                         r.shift_earnings,
                         r.shift_orders,
                         r.shift_trip_distance,
                         r.shift_idle_distance,
                         r.shift_trip_duration,
                         r.shift_idle_duration,
                         r.temperature,
                         r.precipitation,
                         r.snowfall,
                         r.snow_depth};
  std::vector<double> out;
  out.reserve(selected.size());
  for (int i : selected) out.push_back(full[i]);
  return out;
}

std::vector<IdleEvent> to_idle_events(const std::vector<RawRecord>& records,
                                      const std::vector<int>& selected) {
  std::vector<IdleEvent> events;
  events.reserve(records.size());
  std::map<std::string, int> seq;
  for (const auto& r : records) {
    IdleEvent e;
    e.driver_id = r.driver_id;
    e.seq_index = ++seq[r.driver_id];
    e.covariates = build_features(r, selected);
    e.duration = r.idle_duration;
    e.event = r.logoff ? 1 : 0;
    e.wall_clock_start = r.timestamp;
    events.push_back(std::move(e));
  }
  return events;
}

Scaler fit_scaler(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw InvalidArgumentError("fit_scaler: empty training set");
  const size_t p = rows[0].size();
  Scaler s;
  s.mean.assign(p, 0.0);
  s.sd.assign(p, 1.0);
  s.constant.assign(p, 0);
  for (const auto& r : rows) {
    if (r.size() != p) throw InvalidArgumentError("fit_scaler: ragged rows");
    for (size_t j = 0; j < p; ++j) s.mean[j] += r[j];
  }
  for (size_t j = 0; j < p; ++j) s.mean[j] /= static_cast<double>(rows.size());
  std::vector<double> var(p, 0.0);
  for (const auto& r : rows)
    for (size_t j = 0; j < p; ++j) {
      const double d = r[j] - s.mean[j];
      var[j] += d * d;
    }
  for (size_t j = 0; j < p; ++j) {
    var[j] /= static_cast<double>(rows.size());  // population variance
    if (var[j] < 1e-24) {
      s.constant[j] = 1;
      s.sd[j] = 1.0;
    } else {
      s.sd[j] = std::sqrt(var[j]);
    }
  }
  return s;
}

std::vector<double> Scaler::apply(const std::vector<double>& row) const {
  if (row.size() != mean.size())
    throw InvalidArgumentError("Scaler::apply: dimension mismatch");
  std::vector<double> out(row.size());
  for (size_t j = 0; j < row.size(); ++j)
    out[j] = (row[j] - mean[j]) / sd[j];
  return out;
}

std::vector<double> WindowSet::label_durations() const {
  std::vector<double> out(samples.size());
  for (size_t i = 0; i < samples.size(); ++i) out[i] = samples[i].label_duration;
  return out;
}

std::vector<uint8_t> WindowSet::label_events() const {
  std::vector<uint8_t> out(samples.size());
  for (size_t i = 0; i < samples.size(); ++i) out[i] = samples[i].label_event;
  return out;
}

std::vector<WindowSample> build_windows(const DriverHistory& h, int seq_len,
                                        bool left_pad) {
  if (seq_len < 1) throw InvalidArgumentError("build_windows: L must be >= 1");
  const int n = static_cast<int>(h.features.size());
  std::vector<WindowSample> out;
  if (n == 0) return out;
  const int p = static_cast<int>(h.features[0].size());
  const int in_dim = p + 2;

  const int first_target = left_pad ? 0 : seq_len - 1;
  for (int target = first_target; target < n; ++target) {
    WindowSample w;
    w.driver_id = h.driver_id;
    w.target_wall_clock = h.wall_clock[target];
    w.label_duration = h.duration_raw[target];
    w.label_event = h.event[target];
    w.seq.assign(static_cast<size_t>(seq_len) * in_dim, 0.0);
    w.pad_mask.assign(seq_len, 0);
    for (int t = 0; t < seq_len; ++t) {
      const int src = target - (seq_len - 1) + t;
      double* dst = w.seq.data() + static_cast<size_t>(t) * in_dim;
      if (src < 0) {
        w.pad_mask[t] = 1;
        continue;
      }
      std::copy(h.features[src].begin(), h.features[src].end(), dst);
      if (t < seq_len - 1) {  // target row keeps its (0,0) placeholder
        dst[p] = h.duration_std[src];
        dst[p + 1] = static_cast<double>(h.event[src]);
      }
    }
    out.push_back(std::move(w));
  }
  return out;
}

SplitWindows chronological_split(const WindowSet& windows, double train_frac,
                                 double val_frac, double test_frac) {
  if (std::fabs(train_frac + val_frac + test_frac - 1.0) > 1e-9)
    throw InvalidArgumentError("chronological_split: fractions must sum to 1");
  const size_t m = windows.samples.size();
  if (m == 0) throw InvalidArgumentError("chronological_split: no windows");

  std::vector<size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    const auto& wa = windows.samples[a];
    const auto& wb = windows.samples[b];
    if (wa.target_wall_clock != wb.target_wall_clock)
      return wa.target_wall_clock < wb.target_wall_clock;
    return wa.driver_id < wb.driver_id;
  });

  const size_t n_train = static_cast<size_t>(std::floor(train_frac * m));
  const size_t n_val = static_cast<size_t>(std::floor(val_frac * m));

  SplitWindows out;
  for (WindowSet* ws : {&out.train, &out.val, &out.test}) {
    ws->lookback = windows.lookback;
    ws->seq_len = windows.seq_len;
    ws->input_dim = windows.input_dim;
    ws->feature_names = windows.feature_names;
    ws->driver_ids = windows.driver_ids;
  }
  for (size_t i = 0; i < m; ++i) {
    const WindowSample& w = windows.samples[order[i]];
    if (i < n_train)
      out.train.samples.push_back(w);
    else if (i < n_train + n_val)
      out.val.samples.push_back(w);
    else
      out.test.samples.push_back(w);
  }
  return out;
}

PrepResult prep_pipeline(const std::vector<RawRecord>& records, int lookback,
                         const std::set<FeatureGroup>& groups,
                         double train_frac, double val_frac, double test_frac,
                         bool left_pad) {
  if (records.empty()) throw InvalidArgumentError("prep_pipeline: no records");
  if (lookback < 0) throw InvalidArgumentError("prep_pipeline: lookback < 0");
  const int seq_len = lookback + 1;
  const std::vector<int> selected = selected_features(groups);

  // group per driver (records are sorted by (driver, time))
  struct RawHistory {
    std::string driver_id;
    std::vector<const RawRecord*> recs;
  };
  std::vector<RawHistory> drivers;
  for (const auto& r : records) {
    if (drivers.empty() || drivers.back().driver_id != r.driver_id)
      drivers.push_back({r.driver_id, {}});
    drivers.back().recs.push_back(&r);
  }
  std::sort(drivers.begin(), drivers.end(),
            [](const RawHistory& a, const RawHistory& b) {
              return a.driver_id < b.driver_id;
            });

  // Determine the chronological split boundary over window targets before
  // any scaling: the scaler may only see the training period.
  struct TargetRef {
    int64_t ts;
    const std::string* driver;
  };
  std::vector<TargetRef> targets;
  for (const auto& d : drivers) {
    const int first = left_pad ? 0 : seq_len - 1;
    for (int i = first; i < static_cast<int>(d.recs.size()); ++i)
      targets.push_back({d.recs[i]->timestamp, &d.driver_id});
  }
  if (targets.empty())
    throw InvalidArgumentError(
        "prep_pipeline: no windows (histories shorter than the window)");
  std::stable_sort(targets.begin(), targets.end(),
                   [](const TargetRef& a, const TargetRef& b) {
                     if (a.ts != b.ts) return a.ts < b.ts;
                     return *a.driver < *b.driver;
                   });
  const size_t n_train =
      static_cast<size_t>(std::floor(train_frac * targets.size()));
  if (n_train == 0)
    throw InvalidArgumentError("prep_pipeline: empty training split");
  const int64_t train_boundary = targets[n_train - 1].ts;

  // Fit the scaler on training-period rows (covariates and durations).
  std::vector<std::vector<double>> train_rows;
  std::vector<double> train_durations;
  for (const auto& r : records) {
    if (r.timestamp > train_boundary) continue;
    train_rows.push_back(build_features(r, selected));
    train_durations.push_back(r.idle_duration);
  }
  PrepResult prep;
  prep.feature_scaler = fit_scaler(train_rows);
  {
    double mu = 0.0;
    for (double d : train_durations) mu += d;
    mu /= static_cast<double>(train_durations.size());
    double var = 0.0;
    for (double d : train_durations) var += (d - mu) * (d - mu);
    var /= static_cast<double>(train_durations.size());
    prep.duration_mean = mu;
    prep.duration_sd = var < 1e-24 ? 1.0 : std::sqrt(var);
  }

  // Standardize and window all drivers.
  WindowSet all;
  all.lookback = lookback;
  all.seq_len = seq_len;
  all.input_dim = static_cast<int>(selected.size()) + 2;
  for (int i : selected) all.feature_names.push_back(all_feature_names()[i]);
  for (const auto& d : drivers) all.driver_ids.push_back(d.driver_id);

  std::map<std::string, int> driver_index;
  for (size_t i = 0; i < all.driver_ids.size(); ++i)
    driver_index[all.driver_ids[i]] = static_cast<int>(i);

  for (const auto& d : drivers) {
    DriverHistory h;
    h.driver_id = d.driver_id;
    for (const RawRecord* r : d.recs) {
      h.features.push_back(prep.feature_scaler.apply(build_features(*r, selected)));
      h.duration_raw.push_back(r->idle_duration);
      h.duration_std.push_back((r->idle_duration - prep.duration_mean) /
                               prep.duration_sd);
      h.event.push_back(r->logoff ? 1 : 0);
      h.wall_clock.push_back(r->timestamp);
    }
    for (auto& w : build_windows(h, seq_len, left_pad)) {
      w.driver_index = driver_index[w.driver_id];
      all.samples.push_back(std::move(w));
    }
  }

  SplitWindows split =
      chronological_split(all, train_frac, val_frac, test_frac);
  prep.train = std::move(split.train);
  prep.val = std::move(split.val);
  prep.test = std::move(split.test);
  return prep;
}

// ---- binary window cache ---------------------------------------------------

namespace {

constexpr char kWindowMagic[4] = {'F', 'W', 'I', 'N'};
constexpr uint32_t kWindowVersion = 1;

void put_u32(std::ostream& os, uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_u64(std::ostream& os, uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_f64(std::ostream& os, double v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_str(std::ostream& os, const std::string& s) {
  put_u32(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}
uint32_t get_u32(std::istream& is) {
  uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
uint64_t get_u64(std::istream& is) {
  uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
double get_f64(std::istream& is) {
  double v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
std::string get_str(std::istream& is) {
  const uint32_t n = get_u32(is);
  std::string s(n, '\0');
  is.read(s.data(), n);
  return s;
}

static_assert(sizeof(double) == 8, "64-bit IEEE doubles required");

}  // namespace

void save_windows(const std::string& path, const WindowSet& ws) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write '" + path + "'");
  os.write(kWindowMagic, 4);
  put_u32(os, kWindowVersion);
  put_u32(os, static_cast<uint32_t>(ws.lookback));
  put_u32(os, static_cast<uint32_t>(ws.seq_len));
  put_u32(os, static_cast<uint32_t>(ws.input_dim));
  put_u32(os, static_cast<uint32_t>(ws.feature_names.size()));
  for (const auto& f : ws.feature_names) put_str(os, f);
  put_u32(os, static_cast<uint32_t>(ws.driver_ids.size()));
  for (const auto& d : ws.driver_ids) put_str(os, d);
  put_u64(os, ws.samples.size());
  for (const auto& w : ws.samples) {
    put_str(os, w.driver_id);
    put_u32(os, static_cast<uint32_t>(w.driver_index));
    put_u64(os, static_cast<uint64_t>(w.target_wall_clock));
    put_f64(os, w.label_duration);
    put_u32(os, w.label_event);
    os.write(reinterpret_cast<const char*>(w.pad_mask.data()),
             static_cast<std::streamsize>(w.pad_mask.size()));
    os.write(reinterpret_cast<const char*>(w.seq.data()),
             static_cast<std::streamsize>(w.seq.size() * sizeof(double)));
  }
  if (!os) throw IoError("write failed for '" + path + "'");
}

WindowSet load_windows(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "'");
  char magic[4];
  is.read(magic, 4);
  if (std::memcmp(magic, kWindowMagic, 4) != 0)
    throw SchemaError("'" + path + "' is not a window cache file");
  const uint32_t version = get_u32(is);
  if (version != kWindowVersion)
    throw SchemaError("window cache version " + std::to_string(version) +
                      " unsupported");
  WindowSet ws;
  ws.lookback = static_cast<int>(get_u32(is));
  ws.seq_len = static_cast<int>(get_u32(is));
  ws.input_dim = static_cast<int>(get_u32(is));
  const uint32_t nf = get_u32(is);
  for (uint32_t i = 0; i < nf; ++i) ws.feature_names.push_back(get_str(is));
  const uint32_t nd = get_u32(is);
  for (uint32_t i = 0; i < nd; ++i) ws.driver_ids.push_back(get_str(is));
  const uint64_t n = get_u64(is);
  ws.samples.resize(n);
  for (uint64_t i = 0; i < n; ++i) {
    WindowSample& w = ws.samples[i];
    w.driver_id = get_str(is);
    w.driver_index = static_cast<int>(get_u32(is));
    w.target_wall_clock = static_cast<int64_t>(get_u64(is));
    w.label_duration = get_f64(is);
    w.label_event = static_cast<uint8_t>(get_u32(is));
    w.pad_mask.resize(ws.seq_len);
    is.read(reinterpret_cast<char*>(w.pad_mask.data()), ws.seq_len);
    w.seq.resize(static_cast<size_t>(ws.seq_len) * ws.input_dim);
    is.read(reinterpret_cast<char*>(w.seq.data()),
            static_cast<std::streamsize>(w.seq.size() * sizeof(double)));
  }
  if (!is) throw SchemaError("'" + path + "': truncated window cache");
  return ws;
}

void save_scaler(const std::string& path, const PrepResult& prep) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write '" + path + "'");
  os.precision(17);
  os << "format_version=1\n";
  os << "duration_mean=" << prep.duration_mean << "\n";
  os << "duration_sd=" << prep.duration_sd << "\n";
  const auto& s = prep.feature_scaler;
  for (size_t j = 0; j < s.mean.size(); ++j) {
    const std::string& name = prep.train.feature_names[j];
    os << "mean." << name << "=" << s.mean[j] << "\n";
    os << "sd." << name << "=" << s.sd[j] << "\n";
    if (s.constant[j]) os << "constant." << name << "=1\n";
  }
}

}  // namespace fact

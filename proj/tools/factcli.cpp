// Command-line front end for the idle-time survival pipeline: synthetic data
// generation, preprocessing, Kaplan-Meier studies, model fitting, evaluation,
// grid search, ablations, and attention profiles.

#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fact/config.hpp"
#include "fact/cox_loss.hpp"
#include "fact/coxph.hpp"
#include "fact/data.hpp"
#include "fact/errors.hpp"
#include "fact/metrics.hpp"
#include "fact/models.hpp"
#include "fact/survival.hpp"
#include "fact/synth.hpp"
#include "fact/train.hpp"

namespace fs = std::filesystem;
using namespace fact;

namespace {

constexpr const char* kToolVersion = "0.1.0";

const char* category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::usage: return "usage";
    case ErrorCategory::io: return "io";
    case ErrorCategory::schema: return "schema";
    case ErrorCategory::invalid_argument: return "invalid-argument";
    case ErrorCategory::numeric: return "numeric";
    case ErrorCategory::degenerate_metric: return "degenerate-metric";
    case ErrorCategory::unknown_driver: return "unknown-driver";
    case ErrorCategory::training: return "training-failure";
  }
  return "unknown";
}

std::string hex64(uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

uint64_t default_seed() {
  if (const char* env = std::getenv("FACT_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw InvalidArgumentError("FACT_SEED is not an integer");
    }
  }
  return 1;
}

// Collects manifest fields as a command runs; flushed on every exit path.
struct ManifestScope {
  RunManifest m;
  std::string path;

  explicit ManifestScope(const std::string& command) {
    m.command = command;
    m.tool_version = kToolVersion;
    m.start_unix = static_cast<int64_t>(std::time(nullptr));
  }
  void input(const std::string& file) { m.input_hashes[file] = hex64(fnv1a_file(file)); }
  void config(const std::string& key, const std::string& value) {
    m.resolved_config[key] = value;
  }
  void config(const std::string& key, double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    config(key, os.str());
  }
  void config(const std::string& key, int64_t v) { config(key, std::to_string(v)); }
  void flush(const std::string& status, const std::string& message) {
    if (path.empty()) return;
    m.end_unix = static_cast<int64_t>(std::time(nullptr));
    m.status = status;
    m.message = message;
    write_manifest(path, m);
  }
};

std::vector<uint64_t> parse_seed_list(const std::string& s) {
  std::vector<uint64_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    try {
      out.push_back(std::stoull(tok));
    } catch (const std::exception&) {
      throw SchemaError("bad seed list entry '" + tok + "'");
    }
  }
  if (out.empty()) throw SchemaError("empty seed list");
  return out;
}

std::set<FeatureGroup> parse_groups(const std::string& s) {
  std::set<FeatureGroup> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok == "temporal") out.insert(FeatureGroup::temporal);
    else if (tok == "spatial") out.insert(FeatureGroup::spatial);
    else if (tok == "workshift") out.insert(FeatureGroup::workshift);
    else if (tok == "weather") out.insert(FeatureGroup::weather);
    else if (!tok.empty())
      throw InvalidArgumentError("unknown feature group '" + tok + "'");
  }
  if (out.empty()) throw InvalidArgumentError("no feature groups selected");
  return out;
}

TrainConfig train_config_from(ConfigFile& cfg, uint64_t seed,
                              ManifestScope& scope) {
  TrainConfig tc;
  tc.lr = cfg.get_double("lr", tc.lr);
  tc.batch_size = cfg.get_int("batch_size", tc.batch_size);
  tc.max_epochs = cfg.get_int("max_epochs", tc.max_epochs);
  tc.patience = cfg.get_int("patience", tc.patience);
  tc.seeds = parse_seed_list(
      cfg.get_string("seeds", std::to_string(seed)));
  tc.feature_groups =
      parse_groups(cfg.get_string("groups", "temporal,spatial,workshift,weather"));
  tc.model.n_heads = cfg.get_int("model.n_heads", tc.model.n_heads);
  tc.model.frailty_dim = cfg.get_int("model.frailty_dim", tc.model.frailty_dim);
  tc.model.n_layers = cfg.get_int("model.n_layers", tc.model.n_layers);
  tc.model.hidden_dim = cfg.get_int("model.hidden_dim", tc.model.hidden_dim);
  tc.model.dropout = cfg.get_double("model.dropout", tc.model.dropout);
  scope.config("lr", tc.lr);
  scope.config("batch_size", int64_t{tc.batch_size});
  scope.config("max_epochs", int64_t{tc.max_epochs});
  scope.config("patience", int64_t{tc.patience});
  scope.config("model.n_heads", int64_t{tc.model.n_heads});
  scope.config("model.frailty_dim", int64_t{tc.model.frailty_dim});
  scope.config("model.n_layers", int64_t{tc.model.n_layers});
  scope.config("model.hidden_dim", int64_t{tc.model.hidden_dim});
  scope.config("model.dropout", tc.model.dropout);
  return tc;
}

SynthConfig synth_config_from(ConfigFile& cfg, uint64_t seed) {
  SynthConfig sc;
  sc.n_drivers = cfg.get_int("n_drivers", sc.n_drivers);
  sc.horizon_days = cfg.get_double("horizon_days", sc.horizon_days);
  sc.frailty_sd = cfg.get_double("frailty_sd", sc.frailty_sd);
  sc.history_coef = cfg.get_double("history_coef", sc.history_coef);
  sc.history_decay = cfg.get_double("history_decay", sc.history_decay);
  sc.history_scale = cfg.get_double("history_scale", sc.history_scale);
  sc.trip_rate = cfg.get_double("trip_rate", sc.trip_rate);
  sc.weibull_shape = cfg.get_double("weibull_shape", sc.weibull_shape);
  sc.weibull_scale = cfg.get_double("weibull_scale", sc.weibull_scale);
  sc.seed = cfg.get_uint64("seed", seed);
  for (const auto& [name, value] : cfg.take_section("beta")) {
    try {
      sc.beta[name] = std::stod(value);
    } catch (const std::exception&) {
      throw SchemaError("beta." + name + " is not a number");
    }
  }
  return sc;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "'");
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write '" + path + "'");
  return os;
}

// Minimal line-plot SVG from (x, y) series; purely a convenience view of the
// CSV data.
void write_svg(const std::string& path,
               const std::vector<std::pair<std::string,
                                           std::vector<std::pair<double, double>>>>&
                   series) {
  const double W = 640, H = 420, pad = 45;
  double xmax = 1e-9;
  for (const auto& [name, pts] : series)
    for (const auto& [x, y] : pts) xmax = std::max(xmax, x);
  auto px = [&](double x) { return pad + (W - 2 * pad) * x / xmax; };
  auto py = [&](double y) { return H - pad - (H - 2 * pad) * y; };
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                 "#9467bd", "#8c564b"};
  std::ofstream os = open_out(path);
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='"
     << H << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
  os << "<line x1='" << pad << "' y1='" << H - pad << "' x2='" << W - pad
     << "' y2='" << H - pad << "' stroke='black'/>\n";
  os << "<line x1='" << pad << "' y1='" << pad << "' x2='" << pad << "' y2='"
     << H - pad << "' stroke='black'/>\n";
  int ci = 0;
  for (const auto& [name, pts] : series) {
    const char* color = colors[ci % 6];
    os << "<polyline fill='none' stroke='" << color << "' points='";
    for (const auto& [x, y] : pts) os << px(x) << "," << py(y) << " ";
    os << "'/>\n";
    os << "<text x='" << W - pad + 4 << "' y='" << pad + 16 * ci
       << "' font-size='11' fill='" << color << "'>" << name << "</text>\n";
    ++ci;
  }
  os << "</svg>\n";
}

std::vector<std::pair<double, double>> curve_points(const StepFunction& s,
                                                    double tmax) {
  std::vector<std::pair<double, double>> pts{{0.0, s.left_value}};
  for (size_t i = 0; i < s.knots.size(); ++i) {
    pts.emplace_back(s.knots[i], i == 0 ? s.left_value : s.values[i - 1]);
    pts.emplace_back(s.knots[i], s.values[i]);
  }
  pts.emplace_back(tmax, pts.back().second);
  return pts;
}

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s)
    out += (std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
  return out;
}

void check_compatible(const RiskModel& model, const WindowSet& ws) {
  if (model.config().input_dim != ws.input_dim)
    throw SchemaError("checkpoint expects input_dim " +
                      std::to_string(model.config().input_dim) +
                      " but windows have " + std::to_string(ws.input_dim));
  if (model.config().seq_len != ws.seq_len)
    throw SchemaError("checkpoint expects seq_len " +
                      std::to_string(model.config().seq_len) +
                      " but windows have " + std::to_string(ws.seq_len));
}

void write_epochs_csv(const std::string& path, const TrainHistory& hist) {
  std::ofstream os = open_out(path);
  os << "epoch,train_loss,val_c_index\n" << std::setprecision(17);
  for (const auto& e : hist.epochs)
    os << e.epoch << "," << e.train_loss << "," << e.val_c_index << "\n";
}

// ---- subcommand bodies -----------------------------------------------------

void cmd_synth(const std::string& config_path, const std::string& out,
               uint64_t seed, ManifestScope& scope) {
  ConfigFile cfg = config_path.empty()
                       ? ConfigFile()
                       : ConfigFile::parse_file(config_path);
  if (!config_path.empty()) scope.input(config_path);
  SynthConfig sc = synth_config_from(cfg, seed);
  cfg.finish();
  scope.config("n_drivers", int64_t{sc.n_drivers});
  scope.config("frailty_sd", sc.frailty_sd);
  scope.config("history_coef", sc.history_coef);
  scope.config("seed", int64_t{static_cast<int64_t>(sc.seed)});
  scope.m.seed = sc.seed;
  SynthResult result = synth_generate(sc);
  write_csv(out, result.records);
  save_ground_truth(out + ".truth", result.truth);
  std::cout << "wrote " << result.records.size() << " records to " << out
            << "\n";
}

void cmd_prep(const std::string& in, int lookback, const std::string& split,
              const std::string& groups, const std::string& out,
              ManifestScope& scope) {
  double f[3] = {0.70, 0.15, 0.15};
  if (!split.empty()) {
    std::stringstream ss(split);
    std::string tok;
    int i = 0;
    while (std::getline(ss, tok, ',') && i < 3) f[i++] = std::stod(tok);
    if (i != 3) throw InvalidArgumentError("--split needs three fractions");
  }
  scope.input(in);
  scope.config("lookback", int64_t{lookback});
  scope.config("split", split.empty() ? "0.7,0.15,0.15" : split);
  scope.config("groups", groups);
  ensure_dir(out);
  scope.path = (fs::path(out) / "manifest.txt").string();
  const std::vector<RawRecord> records = ingest_csv(in);
  const PrepResult prep =
      prep_pipeline(records, lookback, parse_groups(groups), f[0], f[1], f[2]);
  save_windows((fs::path(out) / "train.fwin").string(), prep.train);
  save_windows((fs::path(out) / "val.fwin").string(), prep.val);
  save_windows((fs::path(out) / "test.fwin").string(), prep.test);
  save_scaler((fs::path(out) / "scaler.txt").string(), prep);
  write_csv((fs::path(out) / "records.csv").string(), records);
  std::cout << "windows: train=" << prep.train.samples.size()
            << " val=" << prep.val.samples.size()
            << " test=" << prep.test.samples.size() << "\n";
}

void cmd_km(const std::string& in, const std::string& rule,
            const std::string& out, bool svg, ManifestScope& scope) {
  scope.input(in);
  scope.config("stratify", rule);
  ensure_dir(out);
  scope.path = (fs::path(out) / "manifest.txt").string();
  const std::vector<RawRecord> records = ingest_csv(in);
  const std::set<FeatureGroup> all_groups = {
      FeatureGroup::temporal, FeatureGroup::spatial, FeatureGroup::workshift,
      FeatureGroup::weather};
  const std::vector<int> selected = selected_features(all_groups);
  std::vector<std::string> names;
  for (int i : selected) names.push_back(all_feature_names()[i]);
  const std::vector<IdleEvent> events = to_idle_events(records, selected);
  const auto groups = stratify(events, rule, names);
  if (groups.empty()) throw DegenerateTestError("stratification is empty");

  struct Group {
    std::string label;
    std::vector<double> durations;
    std::vector<int> events;
  };
  std::vector<Group> gs;
  double tmax = 1e-9;
  for (const auto& [label, idx] : groups) {
    Group g;
    g.label = label;
    for (size_t i : idx) {
      g.durations.push_back(events[i].duration);
      g.events.push_back(events[i].event);
      tmax = std::max(tmax, events[i].duration);
    }
    gs.push_back(std::move(g));
  }

  std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>>
      series;
  for (const auto& g : gs) {
    const StepFunction km = kaplan_meier(g.durations, g.events);
    std::ofstream os =
        open_out((fs::path(out) / ("km_" + sanitize(g.label) + ".csv")).string());
    os << "time,survival\n" << std::setprecision(17);
    os << 0.0 << "," << km.left_value << "\n";
    for (size_t i = 0; i < km.knots.size(); ++i)
      os << km.knots[i] << "," << km.values[i] << "\n";
    series.emplace_back(g.label, curve_points(km, tmax));
  }
  {
    std::ofstream os = open_out((fs::path(out) / "logrank.csv").string());
    os << "group_a,group_b,chi2,p_value\n" << std::setprecision(17);
    for (size_t a = 0; a < gs.size(); ++a)
      for (size_t b = a + 1; b < gs.size(); ++b) {
        try {
          const LogRankResult r =
              logrank_test(gs[a].durations, gs[a].events, gs[b].durations,
                           gs[b].events);
          os << gs[a].label << "," << gs[b].label << "," << r.chi2 << ","
             << r.p_value << "\n";
        } catch (const DegenerateTestError&) {
          os << gs[a].label << "," << gs[b].label << ",nan,nan\n";
        }
      }
  }
  if (svg) write_svg((fs::path(out) / "km.svg").string(), series);
  std::cout << "wrote " << gs.size() << " survival curves to " << out << "\n";
}

void cmd_fit(const std::string& model_name, const std::string& data,
             const std::string& config_path, const std::string& out,
             uint64_t seed, ManifestScope& scope) {
  ConfigFile cfg = config_path.empty()
                       ? ConfigFile()
                       : ConfigFile::parse_file(config_path);
  if (!config_path.empty()) scope.input(config_path);
  scope.input((fs::path(data) / "train.fwin").string());
  scope.input((fs::path(data) / "val.fwin").string());
  ensure_dir(out);
  scope.path = (fs::path(out) / "manifest.txt").string();
  TrainConfig tc = train_config_from(cfg, seed, scope);
  cfg.finish();
  tc.kind = model_kind_from_string(model_name);
  scope.config("model", to_string(tc.kind));
  scope.config("seed", int64_t{static_cast<int64_t>(seed)});

  const WindowSet train = load_windows((fs::path(data) / "train.fwin").string());
  const WindowSet val = load_windows((fs::path(data) / "val.fwin").string());
  TrainHistory hist;
  auto model = train_model(tc, train, val, seed, &hist);
  save_checkpoint((fs::path(out) / "model.ckpt").string(), *model);
  write_epochs_csv((fs::path(out) / "epochs.csv").string(), hist);
  std::cout << std::setprecision(17) << "best_val_c_index="
            << hist.best_val_c_index << " best_epoch=" << hist.best_epoch
            << "\n";
}

void cmd_eval(const std::string& model_path, const std::string& data,
              const std::string& out, uint64_t seed, ManifestScope& scope) {
  scope.input(model_path);
  scope.input((fs::path(data) / "train.fwin").string());
  scope.input((fs::path(data) / "test.fwin").string());
  ensure_dir(out);
  scope.path = (fs::path(out) / "manifest.txt").string();
  auto model = load_checkpoint(model_path);
  const WindowSet train = load_windows((fs::path(data) / "train.fwin").string());
  const WindowSet test = load_windows((fs::path(data) / "test.fwin").string());
  check_compatible(*model, train);
  check_compatible(*model, test);
  const EvalReport report = evaluate_model(
      *model, train, test, seed,
      to_string(model->kind()) + ":" + hex64(fnv1a_file(model_path)));
  const std::string text = format_eval_report(report);
  open_out((fs::path(out) / "eval_report.txt").string()) << text;
  std::cout << text;
}

void cmd_grid(const std::string& spec_path, const std::string& data,
              const std::string& out, uint64_t seed, ManifestScope& scope) {
  ConfigFile cfg = ConfigFile::parse_file(spec_path);
  scope.input(spec_path);
  ensure_dir(out);
  scope.path = (fs::path(out) / "manifest.txt").string();
  auto int_list = [](const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (!tok.empty()) out.push_back(std::stoi(tok));
    return out;
  };
  GridSpec grid;
  grid.m = int_list(cfg.get_string("grid.m", "2,4,6"));
  grid.n = int_list(cfg.get_string("grid.n", "2,4,6,8"));
  grid.l = int_list(cfg.get_string("grid.l", "1,2,3"));
  grid.d = int_list(cfg.get_string("grid.d", "8,16,32,64"));
  TrainConfig base = train_config_from(cfg, seed, scope);
  cfg.finish();
  base.kind = ModelKind::fact;
  scope.config("seed", int64_t{static_cast<int64_t>(seed)});

  const WindowSet train = load_windows((fs::path(data) / "train.fwin").string());
  const WindowSet val = load_windows((fs::path(data) / "val.fwin").string());
  const auto cells = grid_search(grid, base, train, val);
  std::ofstream os = open_out((fs::path(out) / "grid.csv").string());
  os << "rank,m,n,l,d,val_c_index,status\n" << std::setprecision(17);
  int rank = 1;
  for (const auto& c : cells)
    os << rank++ << "," << c.m << "," << c.n << "," << c.l << "," << c.d << ","
       << (c.ok ? std::to_string(c.val_c_index) : "nan") << ","
       << (c.ok ? "ok" : "failed: " + c.message) << "\n";
  std::cout << "ranked " << cells.size() << " grid cells into " << out << "\n";
}

void cmd_ablate(const std::string& config_path, const std::string& data,
                const std::string& out, uint64_t seed, ManifestScope& scope) {
  ConfigFile cfg = ConfigFile::parse_file(config_path);
  scope.input(config_path);
  ensure_dir(out);
  scope.path = (fs::path(out) / "manifest.txt").string();
  TrainConfig base = train_config_from(cfg, seed, scope);
  const int lookback = cfg.get_int("lookback", 10);
  cfg.finish();
  base.model.seq_len = lookback + 1;
  scope.config("lookback", int64_t{lookback});
  scope.config("seed", int64_t{static_cast<int64_t>(seed)});

  const std::string raw = (fs::path(data) / "records.csv").string();
  scope.input(raw);
  const std::vector<RawRecord> records = ingest_csv(raw);
  const auto cells = ablation_run(base, records);
  std::ofstream os = open_out((fs::path(out) / "ablation.csv").string());
  os << "scenario,embedding,test_c_index,sd,status\n" << std::setprecision(17);
  for (const auto& c : cells)
    os << c.scenario << "," << (c.embedding ? "on" : "off") << ","
       << (c.ok ? std::to_string(c.test_c_index) : "nan") << ","
       << (c.ok ? std::to_string(c.test_c_index_sd) : "nan") << ","
       << (c.ok ? "ok" : "failed: " + c.message) << "\n";
  std::cout << "wrote " << cells.size() << " ablation cells to " << out << "\n";
}

void cmd_attention(const std::string& model_path, const std::string& data,
                   const std::string& out, ManifestScope& scope) {
  scope.input(model_path);
  scope.input((fs::path(data) / "test.fwin").string());
  auto model = load_checkpoint(model_path);
  const WindowSet test = load_windows((fs::path(data) / "test.fwin").string());
  check_compatible(*model, test);
  const std::vector<double> profile = attention_profile(*model, test);
  std::ofstream os = open_out(out);
  os << "position,mean_weight\n" << std::setprecision(17);
  for (size_t i = 0; i < profile.size(); ++i)
    os << i << "," << profile[i] << "\n";
  scope.path = out + ".manifest";
  std::cout << "wrote attention profile (" << profile.size()
            << " positions) to " << out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Recurrent-event idle-time survival pipeline"};
  app.require_subcommand(1);
  app.fallthrough();  // accept --seed after the subcommand name too
  uint64_t seed = 0;
  bool seed_set = false;
  app.add_option("--seed", seed, "Master random seed (env FACT_SEED, default 1)")
      ->each([&seed_set](const std::string&) { seed_set = true; });

  std::string config_path, in, out, data, model_name, model_path, split,
      rule = "time_of_day", groups = "temporal,spatial,workshift,weather",
      spec_path;
  int lookback = 10;
  bool svg = false;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth->add_option("--config", config_path, "Generator config file");
  synth->add_option("--out", out, "Output CSV path")->required();

  auto* prep = app.add_subcommand("prep", "Preprocess a CSV into window caches");
  prep->add_option("--in", in, "Input CSV")->required()->check(CLI::ExistingFile);
  prep->add_option("--lookback", lookback, "Historical events per window");
  prep->add_option("--split", split, "train,val,test fractions");
  prep->add_option("--groups", groups, "Enabled feature groups");
  prep->add_option("--out", out, "Output directory")->required();

  auto* km = app.add_subcommand("km", "Kaplan-Meier curves and log-rank tests");
  km->add_option("--in", in, "Input CSV")->required()->check(CLI::ExistingFile);
  km->add_option("--stratify", rule, "Stratification rule");
  km->add_option("--out", out, "Output directory")->required();
  km->add_flag("--svg", svg, "Also draw an SVG plot");

  auto* fit = app.add_subcommand("fit", "Train a risk model");
  fit->add_option("--model", model_name, "coxph|frailty-coxph|deepsurv|transformer-cox|fact")
      ->required();
  fit->add_option("--data", data, "prep output directory")->required();
  fit->add_option("--config", config_path, "Training config file");
  fit->add_option("--out", out, "Run directory")->required();

  auto* eval = app.add_subcommand("eval", "Evaluate a trained checkpoint");
  eval->add_option("--model", model_path, "Checkpoint path")->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--data", data, "prep output directory")->required();
  eval->add_option("--out", out, "Run directory")->required();

  auto* grid = app.add_subcommand("grid", "Hyperparameter grid search");
  grid->add_option("--spec", spec_path, "Grid spec file")->required()
      ->check(CLI::ExistingFile);
  grid->add_option("--data", data, "prep output directory")->required();
  grid->add_option("--out", out, "Run directory")->required();

  auto* ablate = app.add_subcommand("ablate", "Feature-group ablation study");
  ablate->add_option("--config", config_path, "Training config file")->required()
      ->check(CLI::ExistingFile);
  ablate->add_option("--data", data, "prep output directory (records.csv)")
      ->required();
  ablate->add_option("--out", out, "Run directory")->required();

  auto* attention = app.add_subcommand("attention", "Mean attention profile");
  attention->add_option("--model", model_path, "Checkpoint path")->required()
      ->check(CLI::ExistingFile);
  attention->add_option("--data", data, "prep output directory")->required();
  attention->add_option("--out", out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error category=usage message=" << e.what() << "\n";
    return static_cast<int>(ErrorCategory::usage);
  }

  ManifestScope scope(app.get_subcommands().front()->get_name());
  try {
    if (!seed_set) seed = default_seed();
    scope.m.seed = seed;
    if (synth->parsed()) cmd_synth(config_path, out, seed, scope);
    else if (prep->parsed()) cmd_prep(in, lookback, split, groups, out, scope);
    else if (km->parsed()) cmd_km(in, rule, out, svg, scope);
    else if (fit->parsed()) cmd_fit(model_name, data, config_path, out, seed, scope);
    else if (eval->parsed()) cmd_eval(model_path, data, out, seed, scope);
    else if (grid->parsed()) cmd_grid(spec_path, data, out, seed, scope);
    else if (ablate->parsed()) cmd_ablate(config_path, data, out, seed, scope);
    else if (attention->parsed()) cmd_attention(model_path, data, out, scope);
    scope.flush("ok", "");
    return 0;
  } catch (const Error& e) {
    scope.flush(category_name(e.category()), e.what());
    std::cerr << "error category=" << category_name(e.category())
              << " message=" << e.what() << "\n";
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    scope.flush("unknown", e.what());
    std::cerr << "error category=unknown message=" << e.what() << "\n";
    return 1;
  }
}

#include "fact/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fact/cox_loss.hpp"
#include "fact/coxph.hpp"
#include "fact/errors.hpp"
#include "fact/rng.hpp"
#include "fact/survival.hpp"

namespace fact {

void TrainConfig::validate() const {
  if (lr < 0.0) throw InvalidArgumentError("lr must be >= 0");
  if (batch_size < 1) throw InvalidArgumentError("batch_size must be >= 1");
  if (max_epochs < 1) throw InvalidArgumentError("max_epochs must be >= 1");
  if (seeds.empty()) throw InvalidArgumentError("seeds must be nonempty");
  if (feature_groups.empty())
    throw InvalidArgumentError("at least one feature group must be enabled");
}

std::vector<double> model_risks(RiskModel& model, const WindowSet& windows) {
  std::vector<double> out;
  out.reserve(windows.samples.size());
  for (const auto& w : windows.samples) out.push_back(model.risk(w));
  return out;
}

namespace {

struct ParamSnapshot {
  std::vector<std::vector<double>> data;
};

ParamSnapshot snapshot(const RiskModel& model) {
  ParamSnapshot s;
  for (const auto& [name, t] : model.named_parameters()) s.data.push_back(t->data);
  return s;
}

void restore(RiskModel& model, const ParamSnapshot& s) {
  const auto& named = model.named_parameters();
  for (size_t i = 0; i < named.size(); ++i) named[i].second->data = s.data[i];
}

}  // namespace

std::unique_ptr<RiskModel> train_model(const TrainConfig& config,
                                       const WindowSet& train,
                                       const WindowSet& val, uint64_t seed,
                                       TrainHistory* history) {
  config.validate();
  if (train.samples.empty()) throw InvalidArgumentError("empty training split");
  FactConfig mc = config.model;
  mc.seq_len = train.seq_len;
  mc.input_dim = train.input_dim;
  auto model =
      std::make_unique<RiskModel>(config.kind, mc, train.driver_ids, seed);
  auto params = model->parameters();
  ad::AdamState adam;

  const size_t n = train.samples.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});

  TrainHistory local;
  TrainHistory& hist = history ? *history : local;
  hist = TrainHistory{};
  ParamSnapshot best = snapshot(*model);
  int stall = 0;

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    Rng shuffle_rng = Rng(seed).split(static_cast<uint64_t>(epoch) + 1);
    for (size_t i = n; i > 1; --i) {
      const size_t j = shuffle_rng.uniform_int(i);
      std::swap(order[i - 1], order[j]);
    }
    Rng dropout_rng = Rng(seed).split(0x0d120 + static_cast<uint64_t>(epoch));

    double loss_sum = 0.0;
    int64_t event_sum = 0;
    int step = 0;
    for (size_t start = 0; start < n; start += config.batch_size, ++step) {
      const size_t stop = std::min(n, start + config.batch_size);
      RiskSetBatch batch;
      std::vector<ad::TensorPtr> risks;
      risks.reserve(stop - start);
      int64_t batch_events = 0;
      for (size_t k = start; k < stop; ++k) {
        const WindowSample& w = train.samples[order[k]];
        batch.durations.push_back(w.label_duration);
        batch.events.push_back(w.label_event);
        batch_events += w.label_event;
        risks.push_back(model->forward(w, /*training=*/true, &dropout_rng));
      }
      if (batch_events == 0) continue;  // no risk-set anchors, no gradient
      batch.risks = ad::stack_scalars(risks);
      ad::TensorPtr loss = cox_nll(batch);
      if (!std::isfinite(loss->data[0]))
        throw TrainingError("non-finite loss at epoch " +
                            std::to_string(epoch) + " step " +
                            std::to_string(step));
      loss_sum += loss->data[0];
      event_sum += batch_events;
      ad::zero_grad(params);
      ad::backward(loss);
      ad::adam_step(params, adam, config.lr);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = event_sum > 0 ? loss_sum / static_cast<double>(event_sum)
                                   : 0.0;
    const std::vector<double> vr = model_risks(*model, val);
    rec.val_c_index = c_index(vr, val.label_durations(), val.label_events());
    hist.epochs.push_back(rec);

    if (hist.best_epoch < 0 || rec.val_c_index > hist.best_val_c_index) {
      hist.best_epoch = epoch;
      hist.best_val_c_index = rec.val_c_index;
      best = snapshot(*model);
      stall = 0;
    } else if (config.patience > 0 && ++stall >= config.patience) {
      break;
    }
  }

  restore(*model, best);
  return model;
}

EvalReport evaluate_model(RiskModel& model, const WindowSet& baseline_set,
                          const WindowSet& test, uint64_t seed,
                          const std::string& config_fingerprint) {
  if (test.samples.empty()) throw InvalidArgumentError("empty test split");
  const std::vector<double> base_risks = model_risks(model, baseline_set);
  const BaselineHazard baseline = breslow_baseline(
      baseline_set.label_durations(), baseline_set.label_events(), base_risks);

  const std::vector<double> risks = model_risks(model, test);
  const std::vector<double> durations = test.label_durations();
  const std::vector<uint8_t> events = test.label_events();

  EvalReport report;
  report.seed = seed;
  report.config_fingerprint = config_fingerprint;
  report.c_index_integrated =
      c_index(risks, durations, events, &report.n_pairs_used);
  report.horizons = follow_up_percentiles(durations);

  std::vector<int> censor_flags(events.size());
  for (size_t i = 0; i < events.size(); ++i) censor_flags[i] = events[i] ? 0 : 1;
  const StepFunction censor_km = kaplan_meier(durations, censor_flags);

  std::vector<StepFunction> curves;
  curves.reserve(risks.size());
  for (double r : risks) curves.push_back(survival_curve(baseline, r));

  for (double h : report.horizons) {
    report.c_index_at[h] = c_index_truncated(risks, durations, events, h);
    report.brier_at[h] = ipcw_brier(curves, durations, events, h, censor_km);
  }

  double first_event = -1.0;
  for (size_t i = 0; i < events.size(); ++i)
    if (events[i] && (first_event < 0.0 || durations[i] < first_event))
      first_event = durations[i];
  if (first_event < 0.0)
    throw UndefinedMetricError("no events in the test split: IBS undefined");
  const double tau = report.horizons.back();
  if (tau <= first_event)
    throw UndefinedMetricError("degenerate IBS grid: tau <= first event time");
  constexpr int kGridPoints = 100;
  std::vector<double> grid_t(kGridPoints), grid_bs(kGridPoints);
  for (int g = 0; g < kGridPoints; ++g) {
    grid_t[g] = first_event + (tau - first_event) * g / (kGridPoints - 1);
    grid_bs[g] = ipcw_brier(curves, durations, events, grid_t[g], censor_km);
  }
  report.ibs = integrated_brier(grid_t, grid_bs, tau);
  return report;
}

std::vector<GridCell> grid_search(const GridSpec& grid, const TrainConfig& base,
                                  const WindowSet& train,
                                  const WindowSet& val) {
  if (grid.m.empty() || grid.n.empty() || grid.l.empty() || grid.d.empty())
    throw InvalidArgumentError("grid axes must all be nonempty");
  base.validate();
  std::vector<GridCell> cells;
  for (int m : grid.m)
    for (int n : grid.n)
      for (int l : grid.l)
        for (int d : grid.d) {
          GridCell cell;
          cell.m = m;
          cell.n = n;
          cell.l = l;
          cell.d = d;
          TrainConfig cfg = base;
          cfg.model.n_heads = m;
          cfg.model.frailty_dim = n;
          cfg.model.n_layers = l;
          cfg.model.hidden_dim = d;
          try {
            TrainHistory hist;
            train_model(cfg, train, val, base.seeds.front(), &hist);
            cell.val_c_index = hist.best_val_c_index;
            cell.ok = true;
          } catch (const Error& e) {
            cell.ok = false;
            cell.message = e.what();
          }
          cells.push_back(std::move(cell));
        }
  std::stable_sort(cells.begin(), cells.end(),
                   [](const GridCell& a, const GridCell& b) {
                     if (a.ok != b.ok) return a.ok;  // failures sort last
                     if (a.val_c_index != b.val_c_index)
                       return a.val_c_index > b.val_c_index;
                     if (a.d != b.d) return a.d < b.d;
                     if (a.l != b.l) return a.l < b.l;
                     if (a.m != b.m) return a.m < b.m;
                     return a.n < b.n;
                   });
  return cells;
}

std::vector<double> attention_profile(RiskModel& model,
                                      const WindowSet& windows, int layer) {
  if (model.kind() != ModelKind::transformer &&
      model.kind() != ModelKind::fact)
    throw InvalidArgumentError("attention_profile: model has no attention");
  if (windows.samples.empty())
    throw InvalidArgumentError("attention_profile: empty sample set");
  const int L = model.config().seq_len;
  const int n_layers = model.config().n_layers;
  if (layer < 0) layer = n_layers - 1;
  if (layer >= n_layers)
    throw InvalidArgumentError("attention_profile: layer out of range");

  std::vector<double> profile(L, 0.0);
  model.set_record_attention(true);
  for (const auto& w : windows.samples) {
    model.forward(w, /*training=*/false);
    const std::vector<double>& attn = model.last_attention()[layer];
    std::vector<double> row(L, 0.0);
    double s = 0.0;
    for (int tau = 0; tau < L; ++tau) {
      const bool padded =
          tau < static_cast<int>(w.pad_mask.size()) && w.pad_mask[tau];
      if (padded) continue;
      row[tau] = attn[static_cast<size_t>(L - 1) * L + tau];
      s += row[tau];
    }
    if (s <= 0.0)
      throw NumericError("attention_profile: fully masked target row");
    for (int tau = 0; tau < L; ++tau)
      profile[tau] += row[tau] / s / static_cast<double>(windows.samples.size());
  }
  model.set_record_attention(false);
  return profile;
}

std::vector<AblationCell> ablation_run(const TrainConfig& base,
                                       const std::vector<RawRecord>& records) {
  base.validate();
  const int lookback = base.model.seq_len - 1;
  struct Scenario {
    std::string name;
    std::set<FeatureGroup> groups;
    int lookback;
  };
  const std::set<FeatureGroup> all = base.feature_groups;
  auto without = [&all](FeatureGroup g) {
    std::set<FeatureGroup> s = all;
    s.erase(g);
    return s;
  };
  const std::vector<Scenario> scenarios = {
      {"full", all, lookback},
      {"no_temporal", without(FeatureGroup::temporal), lookback},
      {"no_spatial", without(FeatureGroup::spatial), lookback},
      {"no_workshift", without(FeatureGroup::workshift), lookback},
      {"no_weather", without(FeatureGroup::weather), lookback},
      {"no_history", all, 0},
  };

  std::vector<AblationCell> out;
  for (const auto& sc : scenarios) {
    PrepResult prep;
    bool prep_ok = true;
    std::string prep_msg;
    try {
      prep = prep_pipeline(records, sc.lookback, sc.groups);
    } catch (const Error& e) {
      prep_ok = false;
      prep_msg = e.what();
    }
    for (bool embedding : {true, false}) {
      AblationCell cell;
      cell.scenario = sc.name;
      cell.embedding = embedding;
      if (!prep_ok) {
        cell.message = prep_msg;
        out.push_back(std::move(cell));
        continue;
      }
      try {
        std::vector<double> cs;
        for (uint64_t seed : base.seeds) {
          TrainConfig cfg = base;
          cfg.kind = embedding ? ModelKind::fact : ModelKind::transformer;
          auto model = train_model(cfg, prep.train, prep.val, seed);
          EvalReport rep =
              evaluate_model(*model, prep.train, prep.test, seed, sc.name);
          cs.push_back(rep.c_index_integrated);
        }
        const double mean =
            std::accumulate(cs.begin(), cs.end(), 0.0) / cs.size();
        double var = 0.0;
        for (double c : cs) var += (c - mean) * (c - mean);
        cell.test_c_index = mean;
        cell.test_c_index_sd =
            cs.size() > 1 ? std::sqrt(var / (cs.size() - 1)) : 0.0;
        cell.ok = true;
      } catch (const Error& e) {
        cell.ok = false;
        cell.message = e.what();
      }
      out.push_back(std::move(cell));
    }
  }
  return out;
}

}  // namespace fact

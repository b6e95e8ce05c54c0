#pragma once

#include <memory>
#include <set>
#include <string>
#include <vector>

#include "fact/data.hpp"
#include "fact/metrics.hpp"
#include "fact/models.hpp"

namespace fact {

struct TrainConfig {
  ModelKind kind = ModelKind::fact;
  FactConfig model;  // seq_len/input_dim are overwritten from the window set
  double lr = 1e-3;
  int batch_size = 256;
  int max_epochs = 50;
  int patience = 5;  // <= 0 disables early stopping
  std::vector<uint64_t> seeds = {1, 2, 3};
  std::set<FeatureGroup> feature_groups = {
      FeatureGroup::temporal, FeatureGroup::spatial, FeatureGroup::workshift,
      FeatureGroup::weather};

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;   // mean per-event NLL over the epoch's batches
  double val_c_index = 0.0;  // integrated C-index on the validation split
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;
  double best_val_c_index = 0.0;
};

// Minibatch Adam on the recurrent-event Cox loss with per-epoch validation
// C-index, best-checkpoint tracking and patience-based early stopping. The
// returned model carries the best-validation parameters.
std::unique_ptr<RiskModel> train_model(const TrainConfig& config,
                                       const WindowSet& train,
                                       const WindowSet& val, uint64_t seed,
                                       TrainHistory* history = nullptr);

// Inference risk score per window, in sample order.
std::vector<double> model_risks(RiskModel& model, const WindowSet& windows);

// Full test-time report: integrated and horizon-truncated C-index, IPCW
// Brier at the 25/50/75% follow-up percentiles, and IBS on a 100-point grid
// up to the 75th percentile. The Breslow baseline is estimated on
// `baseline_set` (normally the training split).
EvalReport evaluate_model(RiskModel& model, const WindowSet& baseline_set,
                          const WindowSet& test, uint64_t seed,
                          const std::string& config_fingerprint);

struct GridSpec {
  std::vector<int> m = {2, 4, 6};       // heads
  std::vector<int> n = {2, 4, 6, 8};    // frailty dim
  std::vector<int> l = {1, 2, 3};       // layers
  std::vector<int> d = {8, 16, 32, 64};  // hidden dim
};

struct GridCell {
  int m = 0, n = 0, l = 0, d = 0;
  double val_c_index = 0.0;
  bool ok = false;
  std::string message;  // error category/detail for failed cells
};

// Trains every grid combination with the first configured seed and returns
// cells ranked by validation C-index descending; ties break toward smaller
// d, then l, then m, then n. Failed cells sort last, marked with their
// error.
std::vector<GridCell> grid_search(const GridSpec& grid,
                                  const TrainConfig& base,
                                  const WindowSet& train, const WindowSet& val);

// Mean attention row of the target (last) position: averaged over heads at
// `layer` (-1 = final) and over all samples, padded positions dropped and
// each sample's row renormalized to sum 1 first.
std::vector<double> attention_profile(RiskModel& model,
                                      const WindowSet& windows,
                                      int layer = -1);

struct AblationCell {
  std::string scenario;  // full / no_temporal / ... / no_history
  bool embedding = false;
  double test_c_index = 0.0;  // mean over seeds
  double test_c_index_sd = 0.0;
  bool ok = false;
  std::string message;
};

// Feature-group drop study: each scenario retrains from raw records (so the
// scaler and windows match the reduced feature set), with the frailty
// embedding on (fact) and off (transformer-cox), averaged over the
// configured seeds.
std::vector<AblationCell> ablation_run(const TrainConfig& base,
                                       const std::vector<RawRecord>& records);

}  // namespace fact

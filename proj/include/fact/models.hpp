#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "fact/data.hpp"
#include "fact/rng.hpp"
#include "fact/tensor.hpp"

namespace fact {

enum class ModelKind { linear, frailty_linear, mlp, transformer, fact };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

// Hyperparameters shared by all risk models; attention-specific fields are
// ignored by the simpler kinds.
struct FactConfig {
  int n_heads = 2;       // m
  int frailty_dim = 4;   // n
  int n_layers = 2;      // l
  int hidden_dim = 16;   // d, must be divisible by n_heads
  int seq_len = 1;       // L = lookback + 1
  int input_dim = 0;     // p + 2 (covariates plus outcome pair)
  int n_drivers = 0;     // filled from the driver index
  double dropout = 0.0;

  void validate() const;
};

// L x L additive mask: 0 where attendable, large negative above the diagonal.
std::vector<double> causal_mask(int L);

class RiskModel {
 public:
  RiskModel(ModelKind kind, const FactConfig& config,
            std::vector<std::string> driver_ids, uint64_t seed);

  ModelKind kind() const { return kind_; }
  const FactConfig& config() const { return config_; }
  const std::vector<std::string>& driver_ids() const { return driver_ids_; }

  // Scalar risk tensor (graph-connected for training).
  ad::TensorPtr forward(const WindowSample& w, bool training = false,
                        Rng* dropout_rng = nullptr);
  // Plain inference value.
  double risk(const WindowSample& w);
  // True if the most recent forward hit an unknown driver and used the
  // zero (population) embedding.
  bool last_was_fallback() const { return last_fallback_; }

  std::vector<ad::TensorPtr> parameters() const;
  const std::vector<std::pair<std::string, ad::TensorPtr>>& named_parameters()
      const {
    return params_;
  }
  int64_t parameter_count() const;

  void set_record_attention(bool on) { record_attention_ = on; }
  // Per layer, head-averaged L x L attention rows from the last forward.
  const std::vector<std::vector<double>>& last_attention() const {
    return last_attention_;
  }

  // Final-layer encoder states, L x d row-major (attention models only).
  std::vector<double> encoder_outputs(const WindowSample& w);

  int driver_row(const std::string& id) const;
  // Scalar additive risk contribution of a driver's frailty term.
  double frailty_contribution(int driver_row) const;

  ad::TensorPtr find(const std::string& name) const;

 private:
  ad::TensorPtr encode(const WindowSample& w, bool training, Rng* dropout_rng);
  ad::TensorPtr frailty_vector(const WindowSample& w, bool training);
  ad::TensorPtr target_covariates(const WindowSample& w) const;
  ad::TensorPtr mask_tensor(const WindowSample& w) const;

  ModelKind kind_;
  FactConfig config_;
  std::vector<std::string> driver_ids_;
  std::map<std::string, int> driver_index_;
  std::vector<std::pair<std::string, ad::TensorPtr>> params_;
  std::vector<double> pos_encoding_;  // L x d, cached at construction
  bool record_attention_ = false;
  bool last_fallback_ = false;
  std::vector<std::vector<double>> last_attention_;
};

// Bit-exact binary round trip of kind, config, driver index, and parameters.
void save_checkpoint(const std::string& path, const RiskModel& model);
std::unique_ptr<RiskModel> load_checkpoint(const std::string& path);

}  // namespace fact

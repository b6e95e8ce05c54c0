#include "fact/models.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "fact/errors.hpp"

namespace fact {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::linear: return "coxph";
    case ModelKind::frailty_linear: return "frailty-coxph";
    case ModelKind::mlp: return "deepsurv";
    case ModelKind::transformer: return "transformer-cox";
    case ModelKind::fact: return "fact";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "coxph" || s == "linear") return ModelKind::linear;
  if (s == "frailty-coxph" || s == "frailty-linear")
    return ModelKind::frailty_linear;
  if (s == "deepsurv" || s == "mlp") return ModelKind::mlp;
  if (s == "transformer-cox" || s == "transformer")
    return ModelKind::transformer;
  if (s == "fact") return ModelKind::fact;
  throw InvalidArgumentError("unknown model kind '" + s + "'");
}

void FactConfig::validate() const {
  if (n_heads < 1 || frailty_dim < 1 || n_layers < 1 || hidden_dim < 1)
    throw InvalidArgumentError("FactConfig: all dimensions must be >= 1");
  if (hidden_dim % n_heads != 0)
    throw InvalidArgumentError("FactConfig: hidden_dim " +
                               std::to_string(hidden_dim) +
                               " not divisible by n_heads " +
                               std::to_string(n_heads));
  if (seq_len < 1) throw InvalidArgumentError("FactConfig: seq_len must be >= 1");
  if (input_dim < 3)
    throw InvalidArgumentError("FactConfig: input_dim must be p + 2 >= 3");
  if (dropout < 0.0 || dropout >= 1.0)
    throw InvalidArgumentError("FactConfig: dropout must be in [0, 1)");
}

std::vector<double> causal_mask(int L) {
  if (L < 1) throw InvalidArgumentError("causal_mask: L must be >= 1");
  std::vector<double> m(static_cast<size_t>(L) * L, 0.0);
  for (int t = 0; t < L; ++t)
    for (int tau = t + 1; tau < L; ++tau)
      m[static_cast<size_t>(t) * L + tau] = ad::kMaskNegInf;
  return m;
}

namespace {

std::vector<double> sinusoidal_encoding(int L, int d) {
  std::vector<double> pe(static_cast<size_t>(L) * d);
  for (int pos = 0; pos < L; ++pos)
    for (int j = 0; j < d; ++j) {
      const double denom = std::pow(10000.0, 2.0 * (j / 2) / d);
      pe[static_cast<size_t>(pos) * d + j] =
          (j % 2 == 0) ? std::sin(pos / denom) : std::cos(pos / denom);
    }
  return pe;
}

}  // namespace

RiskModel::RiskModel(ModelKind kind, const FactConfig& config,
                     std::vector<std::string> driver_ids, uint64_t seed)
    : kind_(kind), config_(config), driver_ids_(std::move(driver_ids)) {
  config_.validate();
  config_.n_drivers = static_cast<int>(driver_ids_.size());
  for (size_t i = 0; i < driver_ids_.size(); ++i)
    driver_index_[driver_ids_[i]] = static_cast<int>(i);
  if ((kind_ == ModelKind::frailty_linear || kind_ == ModelKind::fact) &&
      driver_ids_.empty())
    throw InvalidArgumentError("frailty models need a nonempty driver index");

  Rng rng(seed);
  auto uniform_init = [&rng](std::vector<int> shape, int fan_in) {
    int64_t n = 1;
    for (int s : shape) n *= s;
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::vector<double> data(static_cast<size_t>(n));
    for (auto& v : data) v = rng.uniform(-bound, bound);
    return ad::param(std::move(shape), std::move(data));
  };
  auto zeros = [](std::vector<int> shape) {
    int64_t n = 1;
    for (int s : shape) n *= s;
    return ad::param(std::move(shape),
                     std::vector<double>(static_cast<size_t>(n), 0.0));
  };
  auto ones = [](std::vector<int> shape) {
    int64_t n = 1;
    for (int s : shape) n *= s;
    return ad::param(std::move(shape),
                     std::vector<double>(static_cast<size_t>(n), 1.0));
  };
  auto add_param = [this](const std::string& name, ad::TensorPtr t) {
    params_.emplace_back(name, std::move(t));
  };

  const int p = config_.input_dim - 2;
  const int d = config_.hidden_dim;
  const int n = config_.frailty_dim;
  const int L = config_.seq_len;
  const int in = config_.input_dim;
  const int nd = config_.n_drivers;

  switch (kind_) {
    case ModelKind::linear:
      add_param("beta", uniform_init({p}, p));
      break;
    case ModelKind::frailty_linear:
      add_param("beta", uniform_init({p}, p));
      add_param("gamma", zeros({nd, 1}));  // drivers start at the baseline
      break;
    case ModelKind::mlp:
      add_param("w1", uniform_init({p, d}, p));
      add_param("b1", uniform_init({d}, p));
      add_param("w2", uniform_init({d, d}, d));
      add_param("b2", uniform_init({d}, d));
      add_param("w3", uniform_init({d}, d));
      add_param("b3", uniform_init({1}, d));
      break;
    case ModelKind::transformer:
    case ModelKind::fact: {
      add_param("wx", uniform_init({in, d}, in));
      add_param("bx", uniform_init({d}, in));
      for (int l = 0; l < config_.n_layers; ++l) {
        const std::string pre = "layer" + std::to_string(l) + ".";
        for (const char* nm : {"wq", "wk", "wv", "wo"})
          add_param(pre + nm, uniform_init({d, d}, d));
        for (const char* nm : {"bq", "bk", "bv", "bo"})
          add_param(pre + nm, uniform_init({d}, d));
        add_param(pre + "ln1_g", ones({d}));
        add_param(pre + "ln1_b", zeros({d}));
        add_param(pre + "ff_w1", uniform_init({d, 4 * d}, d));
        add_param(pre + "ff_b1", uniform_init({4 * d}, d));
        add_param(pre + "ff_w2", uniform_init({4 * d, d}, 4 * d));
        add_param(pre + "ff_b2", uniform_init({d}, 4 * d));
        add_param(pre + "ln2_g", ones({d}));
        add_param(pre + "ln2_b", zeros({d}));
      }
      if (kind_ == ModelKind::fact) {
        add_param("frailty", zeros({nd, n}));
        add_param("head_w", uniform_init({d + n}, d + n));
        add_param("head_b", uniform_init({1}, d + n));
      } else {
        add_param("head_w", uniform_init({d}, d));
        add_param("head_b", uniform_init({1}, d));
      }
      pos_encoding_ = sinusoidal_encoding(L, d);
      break;
    }
  }
}

ad::TensorPtr RiskModel::find(const std::string& name) const {
  for (const auto& [n, t] : params_)
    if (n == name) return t;
  throw InvalidArgumentError("no parameter named '" + name + "'");
}

std::vector<ad::TensorPtr> RiskModel::parameters() const {
  std::vector<ad::TensorPtr> out;
  out.reserve(params_.size());
  for (const auto& [n, t] : params_) out.push_back(t);
  return out;
}

int64_t RiskModel::parameter_count() const {
  int64_t n = 0;
  for (const auto& [nm, t] : params_) n += t->size();
  return n;
}

int RiskModel::driver_row(const std::string& id) const {
  auto it = driver_index_.find(id);
  return it == driver_index_.end() ? -1 : it->second;
}

ad::TensorPtr RiskModel::target_covariates(const WindowSample& w) const {
  const int p = config_.input_dim - 2;
  const int L = config_.seq_len;
  if (static_cast<int>(w.seq.size()) != L * config_.input_dim)
    throw InvalidArgumentError(
        "window sequence size " + std::to_string(w.seq.size()) +
        " does not match L*(p+2) = " + std::to_string(L * config_.input_dim));
  const double* last = w.seq.data() + static_cast<size_t>(L - 1) * config_.input_dim;
  return ad::constant({p}, std::vector<double>(last, last + p));
}

ad::TensorPtr RiskModel::mask_tensor(const WindowSample& w) const {
  const int L = config_.seq_len;
  std::vector<double> m = causal_mask(L);
  // padded positions are masked out as keys everywhere
  for (int tau = 0; tau < L; ++tau) {
    if (tau < static_cast<int>(w.pad_mask.size()) && w.pad_mask[tau]) {
      for (int t = 0; t < L; ++t) m[static_cast<size_t>(t) * L + tau] = ad::kMaskNegInf;
    }
  }
  return ad::constant({L, L}, std::move(m));
}

ad::TensorPtr RiskModel::frailty_vector(const WindowSample& w, bool training) {
  last_fallback_ = false;
  int idx = w.driver_index;
  if (idx < 0 || idx >= config_.n_drivers) idx = driver_row(w.driver_id);
  const int dim = kind_ == ModelKind::fact ? config_.frailty_dim : 1;
  if (idx < 0) {
    if (training)
      throw UnknownDriverError("unknown driver '" + w.driver_id +
                               "' during training");
    last_fallback_ = true;  // cold start: population baseline
    return ad::constant({dim}, std::vector<double>(dim, 0.0));
  }
  const auto table = kind_ == ModelKind::fact ? find("frailty") : find("gamma");
  return ad::embedding_row(table, idx);
}

ad::TensorPtr RiskModel::encode(const WindowSample& w, bool training,
                                Rng* dropout_rng) {
  using namespace ad;
  const int L = config_.seq_len;
  const int d = config_.hidden_dim;
  const int m = config_.n_heads;
  const int dk = d / m;
  if (static_cast<int>(w.seq.size()) != L * config_.input_dim)
    throw InvalidArgumentError("encode: window/config dimension mismatch");

  TensorPtr x = constant({L, config_.input_dim}, w.seq);
  TensorPtr e = add(add(matmul(x, find("wx")), find("bx")),
                    constant({L, d}, pos_encoding_));
  if (config_.dropout > 0.0)
    e = dropout(e, config_.dropout, training, dropout_rng);
  TensorPtr mask = mask_tensor(w);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));

  if (record_attention_) last_attention_.assign(config_.n_layers, {});

  for (int l = 0; l < config_.n_layers; ++l) {
    const std::string pre = "layer" + std::to_string(l) + ".";
    TensorPtr q = add(matmul(e, find(pre + "wq")), find(pre + "bq"));
    TensorPtr k = add(matmul(e, find(pre + "wk")), find(pre + "bk"));
    TensorPtr v = add(matmul(e, find(pre + "wv")), find(pre + "bv"));
    TensorPtr heads;
    for (int h = 0; h < m; ++h) {
      TensorPtr qh = slice_cols(q, h * dk, dk);
      TensorPtr kh = slice_cols(k, h * dk, dk);
      TensorPtr vh = slice_cols(v, h * dk, dk);
      TensorPtr scores = mul_scalar(matmul(qh, transpose(kh)), scale);
      TensorPtr attn = softmax_masked(scores, mask);
      if (record_attention_) {
        auto& acc = last_attention_[l];
        if (acc.empty()) acc.assign(attn->data.size(), 0.0);
        for (size_t i = 0; i < attn->data.size(); ++i)
          acc[i] += attn->data[i] / m;
      }
      TensorPtr oh = matmul(attn, vh);
      heads = heads ? concat(heads, oh) : oh;
    }
    TensorPtr attn_out = add(matmul(heads, find(pre + "wo")), find(pre + "bo"));
    if (config_.dropout > 0.0)
      attn_out = dropout(attn_out, config_.dropout, training, dropout_rng);
    e = layer_norm(add(e, attn_out), find(pre + "ln1_g"), find(pre + "ln1_b"));
    TensorPtr ff = add(
        matmul(relu(add(matmul(e, find(pre + "ff_w1")), find(pre + "ff_b1"))),
               find(pre + "ff_w2")),
        find(pre + "ff_b2"));
    if (config_.dropout > 0.0)
      ff = dropout(ff, config_.dropout, training, dropout_rng);
    e = layer_norm(add(e, ff), find(pre + "ln2_g"), find(pre + "ln2_b"));
    for (double val : e->data)
      if (std::isnan(val))
        throw NumericError("NaN activation in encoder layer " +
                           std::to_string(l));
  }
  return e;
}

ad::TensorPtr RiskModel::forward(const WindowSample& w, bool training,
                                 Rng* dropout_rng) {
  using namespace ad;
  last_fallback_ = false;
  switch (kind_) {
    case ModelKind::linear:
      return sum(mul(target_covariates(w), find("beta")));
    case ModelKind::frailty_linear: {
      TensorPtr dot = sum(mul(target_covariates(w), find("beta")));
      return add(dot, frailty_vector(w, training));
    }
    case ModelKind::mlp: {
      TensorPtr x = target_covariates(w);
      const int p = config_.input_dim - 2;
      TensorPtr h = constant({1, p}, std::vector<double>(x->data));
      h = relu(add(matmul(h, find("w1")), find("b1")));
      h = relu(add(matmul(h, find("w2")), find("b2")));
      return add(sum(mul(row(h, 0), find("w3"))), find("b3"));
    }
    case ModelKind::transformer:
    case ModelKind::fact: {
      TensorPtr enc = encode(w, training, dropout_rng);
      TensorPtr z = row(enc, config_.seq_len - 1);
      if (kind_ == ModelKind::fact)
        z = concat(z, frailty_vector(w, training));
      TensorPtr r = add(sum(mul(z, find("head_w"))), find("head_b"));
      if (!std::isfinite(r->data[0]))
        throw NumericError("non-finite risk output");
      return r;
    }
  }
  throw InvalidArgumentError("forward: unhandled model kind");
}

double RiskModel::risk(const WindowSample& w) {
  return forward(w, /*training=*/false)->data[0];
}

std::vector<double> RiskModel::encoder_outputs(const WindowSample& w) {
  if (kind_ != ModelKind::transformer && kind_ != ModelKind::fact)
    throw InvalidArgumentError("encoder_outputs: not an attention model");
  return encode(w, /*training=*/false, nullptr)->data;
}

double RiskModel::frailty_contribution(int driver_row) const {
  if (kind_ == ModelKind::frailty_linear) {
    const auto gamma = find("gamma");
    return gamma->data.at(static_cast<size_t>(driver_row));
  }
  if (kind_ == ModelKind::fact) {
    // head contribution of the embedding: w_head[d:] . e_i
    const auto table = find("frailty");
    const auto head = find("head_w");
    const int d = config_.hidden_dim;
    const int n = config_.frailty_dim;
    double s = 0.0;
    for (int j = 0; j < n; ++j)
      s += head->data[static_cast<size_t>(d + j)] *
           table->data[static_cast<size_t>(driver_row) * n + j];
    return s;
  }
  throw InvalidArgumentError("frailty_contribution: not a frailty model");
}

// ---- checkpoint ------------------------------------------------------------

namespace {

constexpr char kCkptMagic[4] = {'F', 'C', 'K', 'P'};
constexpr uint32_t kCkptVersion = 1;

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

}  // namespace

void save_checkpoint(const std::string& path, const RiskModel& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write '" + path + "'");
  os.write(kCkptMagic, 4);
  put_u32(os, kCkptVersion);
  put_str(os, to_string(model.kind()));
  const FactConfig& c = model.config();
  put_u32(os, static_cast<uint32_t>(c.n_heads));
  put_u32(os, static_cast<uint32_t>(c.frailty_dim));
  put_u32(os, static_cast<uint32_t>(c.n_layers));
  put_u32(os, static_cast<uint32_t>(c.hidden_dim));
  put_u32(os, static_cast<uint32_t>(c.seq_len));
  put_u32(os, static_cast<uint32_t>(c.input_dim));
  put_f64(os, c.dropout);
  put_u32(os, static_cast<uint32_t>(model.driver_ids().size()));
  for (const auto& id : model.driver_ids()) put_str(os, id);
  const auto& named = model.named_parameters();
  put_u32(os, static_cast<uint32_t>(named.size()));
  for (const auto& [name, t] : named) {
    put_str(os, name);
    put_u32(os, static_cast<uint32_t>(t->shape.size()));
    for (int s : t->shape) put_u32(os, static_cast<uint32_t>(s));
    put_u64(os, t->data.size());
    os.write(reinterpret_cast<const char*>(t->data.data()),
             static_cast<std::streamsize>(t->data.size() * sizeof(double)));
  }
  if (!os) throw IoError("write failed for '" + path + "'");
}

std::unique_ptr<RiskModel> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "'");
  char magic[4];
  is.read(magic, 4);
  if (std::memcmp(magic, kCkptMagic, 4) != 0)
    throw SchemaError("'" + path + "' is not a model checkpoint");
  const uint32_t version = get_u32(is);
  if (version != kCkptVersion)
    throw SchemaError("checkpoint version " + std::to_string(version) +
                      " unsupported");
  const ModelKind kind = model_kind_from_string(get_str(is));
  FactConfig c;
  c.n_heads = static_cast<int>(get_u32(is));
  c.frailty_dim = static_cast<int>(get_u32(is));
  c.n_layers = static_cast<int>(get_u32(is));
  c.hidden_dim = static_cast<int>(get_u32(is));
  c.seq_len = static_cast<int>(get_u32(is));
  c.input_dim = static_cast<int>(get_u32(is));
  c.dropout = get_f64(is);
  const uint32_t nd = get_u32(is);
  std::vector<std::string> drivers;
  drivers.reserve(nd);
  for (uint32_t i = 0; i < nd; ++i) drivers.push_back(get_str(is));
  auto model = std::make_unique<RiskModel>(kind, c, std::move(drivers), 0);
  const uint32_t np = get_u32(is);
  if (np != model->named_parameters().size())
    throw SchemaError("checkpoint parameter count mismatch");
  for (uint32_t i = 0; i < np; ++i) {
    const std::string name = get_str(is);
    const auto& [expect_name, tensor] = model->named_parameters()[i];
    if (name != expect_name)
      throw SchemaError("checkpoint parameter '" + name + "' unexpected (want '" +
                        expect_name + "')");
    const uint32_t ndim = get_u32(is);
    std::vector<int> shape(ndim);
    for (auto& s : shape) s = static_cast<int>(get_u32(is));
    if (shape != tensor->shape)
      throw SchemaError("checkpoint shape mismatch for '" + name + "'");
    const uint64_t count = get_u64(is);
    if (count != tensor->data.size())
      throw SchemaError("checkpoint size mismatch for '" + name + "'");
    is.read(reinterpret_cast<char*>(tensor->data.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
  }
  if (!is) throw SchemaError("'" + path + "': truncated checkpoint");
  return model;
}

}  // namespace fact

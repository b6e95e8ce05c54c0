#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace fact {
class Rng;
}

namespace fact::ad {

// Dense 64-bit real tensor participating in a dynamically recorded
// reverse-mode graph. Nodes own their parents via shared_ptr; the tape is
// implicit in the parent links and freed when the root goes out of scope.
struct Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;
  std::vector<double> grad;  // allocated on demand during backward
  bool requires_grad = false;

  std::vector<TensorPtr> parents;
  // Reads this->grad and accumulates (additively) into parents' grads.
  std::function<void(Tensor&)> backprop;

  int64_t size() const {
    int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
  }
  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
  int rows() const { return shape.size() == 2 ? shape[0] : 1; }
  int cols() const { return shape.empty() ? 1 : shape.back(); }
};

std::string shape_str(const std::vector<int>& shape);

// Non-differentiable node.
TensorPtr constant(std::vector<int> shape, std::vector<double> data);
// Trainable leaf.
TensorPtr param(std::vector<int> shape, std::vector<double> data);
TensorPtr scalar(double v);

// Reverse pass from a scalar root: seeds grad 1, traverses the recorded
// graph in reverse topological order exactly once.
void backward(const TensorPtr& root);

void zero_grad(const std::vector<TensorPtr>& params);

// ---- operator set -------------------------------------------------------

TensorPtr add(const TensorPtr& a, const TensorPtr& b);  // equal shapes, or b
                                                        // a row vector
TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(const TensorPtr& a, const TensorPtr& b);  // elementwise
TensorPtr mul_scalar(const TensorPtr& a, double c);
TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);
TensorPtr transpose(const TensorPtr& a);
// Concatenation along the last axis (1-D or 2-D with equal row counts).
TensorPtr concat(const TensorPtr& a, const TensorPtr& b);
// Row/column slices of a 2-D tensor; row() drops to 1-D.
TensorPtr slice_rows(const TensorPtr& a, int start, int len);
TensorPtr slice_cols(const TensorPtr& a, int start, int len);
TensorPtr row(const TensorPtr& a, int index);
TensorPtr sum(const TensorPtr& a);   // scalar, shape {1}
TensorPtr mean(const TensorPtr& a);  // scalar, shape {1}
TensorPtr exp_t(const TensorPtr& a);
TensorPtr log_t(const TensorPtr& a);
TensorPtr tanh_t(const TensorPtr& a);
TensorPtr relu(const TensorPtr& a);
// Softmax over the last axis after adding `mask` (entries 0 or the
// large-negative sentinel below). Rows that are fully masked output zeros.
TensorPtr softmax_masked(const TensorPtr& logits, const TensorPtr& mask);
TensorPtr softmax(const TensorPtr& logits);
// Layer normalization over the last axis with learnable gain/bias.
TensorPtr layer_norm(const TensorPtr& x, const TensorPtr& gain,
                     const TensorPtr& bias, double eps = 1e-5);
// Row lookup into an embedding table; gradient scatters into that row.
TensorPtr embedding_row(const TensorPtr& table, int index);

// Inverted dropout; identity when !training or rate == 0.
TensorPtr dropout(const TensorPtr& x, double rate, bool training,
                  fact::Rng* rng);

// Packs scalar nodes into one 1-D tensor (used to batch per-window risks).
TensorPtr stack_scalars(const std::vector<TensorPtr>& xs);

// Additive mask sentinel standing in for -inf (avoids NaN from inf*0 in
// backward).
constexpr double kMaskNegInf = -1e30;

// ---- gradient checking and optimization ---------------------------------

// Compares the analytic gradient of a scalar-valued function against
// central finite differences, per parameter element. `f` rebuilds the
// graph on every call. Returns the worst relative error with denominator
// max(|analytic|, |numeric|, 1e-8).
double gradcheck(const std::function<TensorPtr()>& f,
                 const std::vector<TensorPtr>& params, double eps = 1e-5);

struct AdamState {
  std::vector<std::vector<double>> m, v;
  int64_t t = 0;
};

struct AdamResult {
  int skipped = 0;  // tensors whose update was skipped (non-finite grad)
};

AdamResult adam_step(const std::vector<TensorPtr>& params, AdamState& state,
                     double lr, double beta1 = 0.9, double beta2 = 0.999,
                     double eps = 1e-8);

}  // namespace fact::ad

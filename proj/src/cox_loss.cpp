#include "fact/cox_loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fact/errors.hpp"

namespace fact {

namespace {

// log(exp(a) + exp(b)) without overflow; handles -inf sentinels.
double log_add(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == -std::numeric_limits<double>::infinity()) return a;
  return a + std::log1p(std::exp(b - a));
}

}  // namespace

ad::TensorPtr cox_nll(const RiskSetBatch& batch) {
  const auto& risks = batch.risks;
  if (!risks || risks->shape.size() != 1 || risks->shape[0] < 1)
    throw InvalidArgumentError("cox_nll: risks must be a nonempty 1-D tensor");
  const size_t b = static_cast<size_t>(risks->shape[0]);
  if (batch.durations.size() != b || batch.events.size() != b)
    throw InvalidArgumentError("cox_nll: durations/events must match batch size " +
                               std::to_string(b));

  std::vector<size_t> order(b);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t i, size_t j) {
    return batch.durations[i] > batch.durations[j];
  });

  constexpr double neg_inf = -std::numeric_limits<double>::infinity();

  // Forward: walk groups of tied durations in descending order, extending a
  // streaming log-sum-exp with the whole group before emitting its event
  // terms (ties are in each other's risk sets).
  double loss = 0.0;
  double lse = neg_inf;
  // per item: position of its tie group; per group: log denominator
  std::vector<int> group_of(b, 0);
  std::vector<double> group_logdenom;
  std::vector<double> group_event_count;
  size_t i = 0;
  while (i < b) {
    const double t = batch.durations[order[i]];
    size_t j = i;
    while (j < b && batch.durations[order[j]] == t) ++j;
    for (size_t k = i; k < j; ++k)
      lse = log_add(lse, risks->data[order[k]]);
    const int g = static_cast<int>(group_logdenom.size());
    double ev = 0.0;
    for (size_t k = i; k < j; ++k) {
      group_of[order[k]] = g;
      if (batch.events[order[k]]) {
        loss += lse - risks->data[order[k]];
        ev += 1.0;
      }
    }
    group_logdenom.push_back(lse);
    group_event_count.push_back(ev);
    i = j;
  }

  auto out = std::make_shared<ad::Tensor>();
  out->shape = {1};
  out->data = {loss};
  out->parents = {risks};
  out->requires_grad = risks->requires_grad;
  if (out->requires_grad) {
    const size_t ngroups = group_logdenom.size();
    // suffix log-sum of exp(-logdenom) weighted by event counts, by group:
    // grad_i = -delta_i + exp(r_i + logA[group(i)])
    std::vector<double> log_a(ngroups, neg_inf);
    double acc = neg_inf;
    for (size_t g = ngroups; g-- > 0;) {
      if (group_event_count[g] > 0.0)
        acc = log_add(acc, std::log(group_event_count[g]) - group_logdenom[g]);
      log_a[g] = acc;
    }
    auto events = batch.events;
    auto groups = group_of;
    out->backprop = [log_a, events, groups](ad::Tensor& self) {
      auto& pr = self.parents[0];
      if (!pr->requires_grad) return;
      pr->ensure_grad();
      const double g0 = self.grad[0];
      for (size_t k = 0; k < pr->data.size(); ++k) {
        const double la = log_a[static_cast<size_t>(groups[k])];
        const double pos = la == -std::numeric_limits<double>::infinity()
                               ? 0.0
                               : std::exp(pr->data[k] + la);
        pr->grad[k] += g0 * (pos - (events[k] ? 1.0 : 0.0));
      }
    };
  }
  return out;
}

double cox_nll_naive(const std::vector<double>& risks,
                     const std::vector<double>& durations,
                     const std::vector<uint8_t>& events) {
  const size_t b = risks.size();
  if (b == 0) throw InvalidArgumentError("cox_nll_naive: empty batch");
  if (durations.size() != b || events.size() != b)
    throw InvalidArgumentError("cox_nll_naive: length mismatch");
  double loss = 0.0;
  for (size_t i = 0; i < b; ++i) {
    if (!events[i]) continue;
    double mx = -std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < b; ++j)
      if (durations[j] >= durations[i]) mx = std::max(mx, risks[j]);
    double denom = 0.0;
    for (size_t j = 0; j < b; ++j)
      if (durations[j] >= durations[i]) denom += std::exp(risks[j] - mx);
    loss += mx + std::log(denom) - risks[i];
  }
  return loss;
}

}  // namespace fact

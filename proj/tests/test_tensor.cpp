#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "fact/rng.hpp"
#include "fact/tensor.hpp"

using namespace fact;
using namespace fact::ad;

namespace {

TensorPtr random_param(Rng& rng, std::vector<int> shape) {
  int64_t n = 1;
  for (int s : shape) n *= s;
  std::vector<double> d(n);
  for (auto& v : d) v = rng.uniform(-1.0, 1.0);
  return param(std::move(shape), std::move(d));
}

}  // namespace

TEST_CASE("matmul forward matches a naive triple loop") {
  Rng rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    const int m = 1 + rng.uniform_int(6), k = 1 + rng.uniform_int(6),
              n = 1 + rng.uniform_int(6);
    TensorPtr a = random_param(rng, {m, k});
    TensorPtr b = random_param(rng, {k, n});
    TensorPtr c = matmul(a, b);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0;
        for (int q = 0; q < k; ++q) s += a->data[i * k + q] * b->data[q * n + j];
        REQUIRE(c->data[i * n + j] == doctest::Approx(s).epsilon(1e-12));
      }
  }
}

TEST_CASE("gradcheck passes for every primitive op") {
  Rng rng(17);
  TensorPtr a = random_param(rng, {3, 4});
  TensorPtr b = random_param(rng, {3, 4});
  TensorPtr w = random_param(rng, {4, 3});
  TensorPtr g = random_param(rng, {4});
  TensorPtr bias = random_param(rng, {4});

  auto check = [](const std::function<TensorPtr()>& f,
                  const std::vector<TensorPtr>& ps) {
    CHECK(gradcheck(f, ps) < 1e-6);
  };

  check([&] { return sum(add(a, b)); }, {a, b});
  check([&] { return sum(sub(a, b)); }, {a, b});
  check([&] { return sum(mul(a, b)); }, {a, b});
  check([&] { return sum(mul_scalar(a, 2.5)); }, {a});
  check([&] { return sum(matmul(a, w)); }, {a, w});
  check([&] { return sum(matmul(transpose(a), b)); }, {a});
  check([&] { return sum(concat(a, b)); }, {a, b});
  check([&] { return sum(slice_rows(a, 1, 2)); }, {a});
  check([&] { return sum(slice_cols(a, 1, 2)); }, {a});
  check([&] { return sum(row(a, 2)); }, {a});
  check([&] { return mean(a); }, {a});
  check([&] { return sum(exp_t(mul_scalar(a, 0.3))); }, {a});
  check([&] { return sum(log_t(add(mul(a, a), constant({3, 4}, std::vector<double>(12, 1.0))))); }, {a});
  check([&] { return sum(tanh_t(a)); }, {a});
  check([&] { return sum(mul(relu(a), b)); }, {a});
  check([&] { return sum(mul(softmax(a), b)); }, {a});
  check([&] { return sum(mul(layer_norm(a, g, bias), b)); }, {a, g, bias});
  check([&] { return sum(embedding_row(a, 1)); }, {a});
}

TEST_CASE("masked softmax with fully masked rows produces zeros") {
  TensorPtr logits = param({2, 3}, {1, 2, 3, 4, 5, 6});
  TensorPtr mask = constant(
      {2, 3}, {0, kMaskNegInf, 0, kMaskNegInf, kMaskNegInf, kMaskNegInf});
  TensorPtr s = softmax_masked(logits, mask);
  CHECK(s->data[1] == 0.0);
  CHECK(s->data[0] + s->data[2] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s->data[3] == 0.0);
  CHECK(s->data[4] == 0.0);
  CHECK(s->data[5] == 0.0);

  // masked positions receive no gradient
  TensorPtr w = param({2, 3}, {1, 1, 1, 1, 1, 1});
  TensorPtr loss = sum(mul(softmax_masked(logits, mask), w));
  zero_grad({logits});
  backward(loss);
  CHECK(logits->grad[1] == 0.0);
  CHECK(logits->grad[4] == 0.0);

  Rng rng(11);
  TensorPtr l2 = random_param(rng, {3, 3});
  TensorPtr m2 = constant({3, 3}, {0, kMaskNegInf, kMaskNegInf,
                                   0, 0, kMaskNegInf,
                                   0, 0, 0});
  TensorPtr v = random_param(rng, {3, 3});
  CHECK(gradcheck([&] { return sum(mul(softmax_masked(l2, m2), v)); },
                  {l2, v}) < 1e-6);
}

TEST_CASE("gradcheck on a composite MLP-like graph") {
  Rng rng(23);
  TensorPtr x = random_param(rng, {2, 5});
  TensorPtr w1 = random_param(rng, {5, 7});
  TensorPtr b1 = random_param(rng, {7});
  TensorPtr w2 = random_param(rng, {7, 1});
  auto f = [&] {
    return sum(matmul(tanh_t(add(matmul(x, w1), b1)), w2));
  };
  CHECK(gradcheck(f, {x, w1, b1, w2}) < 1e-6);
}

TEST_CASE("backward accumulates through shared subexpressions") {
  TensorPtr x = param({1}, {3.0});
  TensorPtr y = mul(x, x);           // x^2
  TensorPtr z = add(y, mul(y, x));   // x^2 + x^3; dz/dx = 2x + 3x^2 = 33
  zero_grad({x});
  backward(sum(z));
  CHECK(x->grad[0] == doctest::Approx(33.0).epsilon(1e-12));
}

TEST_CASE("stack_scalars concatenates and routes gradients") {
  TensorPtr a = param({1}, {2.0});
  TensorPtr b = param({1}, {5.0});
  TensorPtr s = stack_scalars({a, b});
  REQUIRE(s->data == std::vector<double>{2.0, 5.0});
  TensorPtr loss = sum(mul(s, constant({2}, {3.0, 7.0})));
  zero_grad({a, b});
  backward(loss);
  CHECK(a->grad[0] == 3.0);
  CHECK(b->grad[0] == 7.0);
}

TEST_CASE("dropout is identity at inference and rescales in training") {
  Rng rng(31);
  TensorPtr x = random_param(rng, {10, 10});
  TensorPtr y = dropout(x, 0.5, /*training=*/false, nullptr);
  CHECK(y->data == x->data);
  Rng drng(1);
  TensorPtr z = dropout(x, 0.5, /*training=*/true, &drng);
  int zeros = 0;
  for (size_t i = 0; i < z->data.size(); ++i) {
    if (z->data[i] == 0.0) ++zeros;
    else CHECK(z->data[i] == doctest::Approx(x->data[i] * 2.0).epsilon(1e-12));
  }
  CHECK(zeros > 20);
  CHECK(zeros < 80);
}

TEST_CASE("adam with lr=0 leaves parameters unchanged; step reduces a quadratic") {
  TensorPtr x = param({2}, {5.0, -3.0});
  AdamState st;
  auto loss = [&] { return sum(mul(x, x)); };
  TensorPtr l0 = loss();
  zero_grad({x});
  backward(l0);
  adam_step({x}, st, 0.0);
  CHECK(x->data == std::vector<double>{5.0, -3.0});

  AdamState st2;
  for (int i = 0; i < 2000; ++i) {
    TensorPtr l = loss();
    zero_grad({x});
    backward(l);
    adam_step({x}, st2, 0.05);
  }
  CHECK(std::abs(x->data[0]) < 1e-3);
  CHECK(std::abs(x->data[1]) < 1e-3);
}

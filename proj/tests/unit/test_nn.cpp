#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "doctest.h"
#include "segloc/nn/adam.hpp"
#include "segloc/nn/checkpoint.hpp"
#include "segloc/nn/layers.hpp"
#include "segloc/nn/losses.hpp"
#include "support/gradcheck.hpp"

using namespace segloc::nn;
using segloc::testing::check_entries;
using segloc::testing::check_params;
using segloc::testing::GradCheckReport;
using segloc::testing::check_network;
using segloc::testing::random_tensor;
using segloc::testing::separated_tensor;

namespace {

// Direct 3x3x3 zero-padded correlation.
Tensor naive_conv(const Tensor& x, const std::vector<double>& w, const std::vector<double>& b, int cout) {
  const int n = x.shape[0], cin = x.shape[1], D = x.shape[2], H = x.shape[3], W = x.shape[4];
  Tensor y({n, cout, D, H, W});
  for (int s = 0; s < n; ++s)
    for (int o = 0; o < cout; ++o)
      for (int d = 0; d < D; ++d)
        for (int h = 0; h < H; ++h)
          for (int e = 0; e < W; ++e) {
            double acc = b[o];
            for (int c = 0; c < cin; ++c)
              for (int kd = 0; kd < 3; ++kd)
                for (int kh = 0; kh < 3; ++kh)
                  for (int kw = 0; kw < 3; ++kw) {
                    const int i = d + kd - 1, j = h + kh - 1, k = e + kw - 1;
                    if (i < 0 || j < 0 || k < 0 || i >= D || j >= H || k >= W) continue;
                    acc += w[(((o * cin + c) * 3 + kd) * 3 + kh) * 3 + kw] *
                           x.data[((((std::size_t)s * cin + c) * D + i) * H + j) * W + k];
                  }
            y.data[((((std::size_t)s * cout + o) * D + d) * H + h) * W + e] = acc;
          }
  return y;
}

// Direct scatter form of the stride-2 transposed convolution.
Tensor naive_deconv(const Tensor& x, const std::vector<double>& w, const std::vector<double>& b, int cout) {
  const int n = x.shape[0], cin = x.shape[1], D = x.shape[2], H = x.shape[3], W = x.shape[4];
  Tensor y({n, cout, 2 * D, 2 * H, 2 * W});
  for (int s = 0; s < n; ++s) {
    for (int o = 0; o < cout; ++o)
      for (std::size_t q = 0; q < (std::size_t)8 * D * H * W; ++q)
        y.data[((std::size_t)s * cout + o) * 8 * D * H * W + q] = b[o];
    for (int c = 0; c < cin; ++c)
      for (int d = 0; d < D; ++d)
        for (int h = 0; h < H; ++h)
          for (int e = 0; e < W; ++e)
            for (int o = 0; o < cout; ++o)
              for (int kd = 0; kd < 3; ++kd)
                for (int kh = 0; kh < 3; ++kh)
                  for (int kw = 0; kw < 3; ++kw) {
                    const int i = 2 * d - 1 + kd, j = 2 * h - 1 + kh, k = 2 * e - 1 + kw;
                    if (i < 0 || j < 0 || k < 0 || i >= 2 * D || j >= 2 * H || k >= 2 * W) continue;
                    y.data[((((std::size_t)s * cout + o) * 2 * D + i) * 2 * H + j) * 2 * W + k] +=
                        w[(((c * cout + o) * 3 + kd) * 3 + kh) * 3 + kw] *
                        x.data[((((std::size_t)s * cin + c) * D + d) * H + h) * W + e];
                  }
  }
  return y;
}

}  // namespace

TEST_CASE("dense with identity weights passes the input through") {
  Dense d(4, 4);
  for (int i = 0; i < 4; ++i) d.weight().value[i * 4 + i] = 1.0;
  const Tensor x({2, 4}, {1, -2, 3, 4, 5, 6, -7, 8});
  CHECK(d.forward(x, Mode::eval).data == x.data);
}

TEST_CASE("relu definition") {
  Relu r;
  CHECK(r.forward(Tensor({1, 3}, {-1, 0, 2}), Mode::eval).data == std::vector<double>{0, 0, 2});
}

TEST_CASE("conv3d matches the naive correlation oracle") {
  std::mt19937_64 rng(1);
  SUBCASE("impulse with a known kernel") {
    Conv3d conv(1, 1);
    auto& w = conv.params()[0]->value;
    std::iota(w.begin(), w.end(), 1.0);
    Tensor x({1, 1, 4, 4, 4});
    x.data[(1 * 4 + 2) * 4 + 1] = 1.0;
    const Tensor y = conv.forward(x, Mode::eval);
    CHECK(y.data == naive_conv(x, w, {0.0}, 1).data);
    // Correlation flips the kernel around the impulse.
    CHECK(y.data[(0 * 4 + 1) * 4 + 0] == w[26]);
    CHECK(y.data[(1 * 4 + 2) * 4 + 1] == w[13]);
  }
  SUBCASE("random multi-channel") {
    Conv3d conv(3, 4);
    conv.init(rng);
    auto& b = conv.params()[1]->value;
    for (auto& v : b) v = std::uniform_real_distribution<double>(-1, 1)(rng);
    const Tensor x = random_tensor({2, 3, 4, 6, 2}, rng);
    const Tensor y = conv.forward(x, Mode::eval);
    const Tensor z = naive_conv(x, conv.params()[0]->value, b, 4);
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(y.data[i] == doctest::Approx(z.data[i]).epsilon(1e-12));
  }
}

TEST_CASE("deconv3d matches the naive scatter oracle") {
  std::mt19937_64 rng(2);
  Deconv3d dec(3, 2);
  dec.init(rng);
  auto& b = dec.params()[1]->value;
  b = {0.25, -0.5};
  const Tensor x = random_tensor({2, 3, 2, 3, 2}, rng);
  const Tensor y = dec.forward(x, Mode::eval);
  REQUIRE(y.shape == Shape{2, 2, 4, 6, 4});
  const Tensor z = naive_deconv(x, dec.params()[0]->value, b, 2);
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(y.data[i] == doctest::Approx(z.data[i]).epsilon(1e-12));
}

TEST_CASE("dense gradient equals the closed form for squared error") {
  std::mt19937_64 rng(3);
  Dense d(3, 2);
  d.init(rng);
  const Tensor x({1, 3}, {0.5, -1.0, 2.0});
  const Tensor target({1, 2}, {1.0, -1.0});
  const Tensor y = d.forward(x, Mode::train);
  Tensor residual = y;
  for (std::size_t i = 0; i < 2; ++i) residual.data[i] -= target.data[i];
  d.backward(residual);
  for (int o = 0; o < 2; ++o) {
    CHECK(d.bias().grad[o] == doctest::Approx(residual.data[o]));
    for (int i = 0; i < 3; ++i) CHECK(d.weight().grad[o * 3 + i] == doctest::Approx(residual.data[o] * x.data[i]));
  }
}

TEST_CASE("zero upstream gradient gives zero parameter gradients") {
  std::mt19937_64 rng(4);
  Sequential net;
  net.add<Conv3d>(1, 2);
  net.add<BatchNorm>(2);
  net.add<Relu>();
  net.add<Flatten>();
  net.add<Dense>(2 * 4 * 4 * 4, 3);
  net.init(rng);
  const Tensor y = net.forward(random_tensor({2, 1, 4, 4, 4}, rng), Mode::train);
  net.zero_grad();
  net.backward(Tensor(y.shape));
  for (Param* p : net.params())
    for (double g : p->grad) CHECK(g == 0.0);
}

TEST_CASE("every layer kind passes central finite differences") {
  std::mt19937_64 rng(5);
  auto run = [&](Sequential& net, const Tensor& x) {
    net.init(rng);
    const auto report = check_network(net, x, rng);
    CHECK_MESSAGE(report.max_rel_error < 1e-4, report.worst);
    CHECK(report.checked > 0);
  };
  SUBCASE("conv3d") {
    Sequential n;
    n.add<Conv3d>(2, 3);
    run(n, random_tensor({2, 2, 4, 3, 2}, rng));
  }
  SUBCASE("deconv3d") {
    Sequential n;
    n.add<Deconv3d>(3, 2);
    run(n, random_tensor({2, 3, 2, 2, 3}, rng));
  }
  SUBCASE("maxpool3d") {
    Sequential n;
    n.add<MaxPool3d>();
    run(n, separated_tensor({2, 2, 4, 4, 2}, rng));
  }
  SUBCASE("dense") {
    Sequential n;
    n.add<Dense>(5, 4);
    run(n, random_tensor({3, 5}, rng));
  }
  SUBCASE("relu") {
    Sequential n;
    n.add<Relu>();
    run(n, separated_tensor({3, 7}, rng));
  }
  SUBCASE("sigmoid") {
    Sequential n;
    n.add<Sigmoid>();
    run(n, random_tensor({3, 7}, rng, -4, 4));
  }
  SUBCASE("batchnorm over channels") {
    Sequential n;
    n.add<BatchNorm>(3);
    auto& bn = n.layer(0);
    run(n, random_tensor({2, 3, 2, 2, 2}, rng));
    // Non-trivial affine parameters.
    bn.params()[0]->value = {1.5, -0.7, 0.3};
    bn.params()[1]->value = {0.1, 0.2, -0.3};
    const auto report = check_network(n, random_tensor({2, 3, 2, 2, 2}, rng), rng);
    CHECK_MESSAGE(report.max_rel_error < 1e-4, report.worst);
  }
  SUBCASE("batchnorm over features") {
    Sequential n;
    n.add<Flatten>();
    n.add<BatchNorm>(6);
    run(n, random_tensor({5, 6}, rng));
  }
  SUBCASE("dropout") {
    Sequential n;
    n.add<Dropout>(0.5);
    run(n, random_tensor({4, 9}, rng));
  }
  SUBCASE("concat_scale, flatten and reshape") {
    Sequential n;
    n.add<Flatten>();
    n.add<ConcatScale>(3).set_side(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
    n.add<Dense>(2 * 2 * 2 * 2 + 3, 8);
    n.add<Reshape>(Shape{1, 2, 2, 2});
    n.add<Conv3d>(1, 1);
    run(n, random_tensor({2, 2, 2, 2, 2}, rng));
  }
}

TEST_CASE("adam first step moves each weight by about the learning rate") {
  Param p("w", {3});
  p.value = {1.0, -2.0, 0.5};
  p.grad = {0.3, -40.0, 1e-3};
  Adam adam({&p}, AdamConfig{1e-3});
  REQUIRE(adam.step());
  CHECK(p.value[0] == doctest::Approx(1.0 - 1e-3).epsilon(1e-6));
  CHECK(p.value[1] == doctest::Approx(-2.0 + 1e-3).epsilon(1e-6));
  CHECK(p.value[2] == doctest::Approx(0.5 - 1e-3).epsilon(1e-4));
}

TEST_CASE("adam leaves parameters alone under zero gradients and skips non-finite ones") {
  Param p("w", {2});
  p.value = {1.0, 2.0};
  Adam adam({&p});
  for (int i = 0; i < 5; ++i) adam.step();
  CHECK(p.value == std::vector<double>{1.0, 2.0});
  p.grad = {NAN, 1.0};
  CHECK_FALSE(adam.step());
  CHECK(adam.skipped_steps() == 1);
  CHECK(adam.steps() == 5);
  CHECK(p.value == std::vector<double>{1.0, 2.0});
}

TEST_CASE("adam converges on a convex bowl") {
  // f(x) = sum_i a_i (x_i - c_i)^2
  const std::vector<double> a{1.0, 3.0, 0.5, 2.0}, c{0.3, -0.2, 0.1, 0.25};
  Param p("x", {4});
  p.value = {0.0, 0.0, 0.0, 0.0};
  Adam adam({&p}, AdamConfig{0.003});
  auto f = [&] {
    double s = 0.0;
    for (int i = 0; i < 4; ++i) s += a[i] * (p.value[i] - c[i]) * (p.value[i] - c[i]);
    return s;
  };
  std::vector<double> losses;
  for (int step = 0; step < 200; ++step) {
    for (int i = 0; i < 4; ++i) p.grad[i] = 2.0 * a[i] * (p.value[i] - c[i]);
    adam.step();
    losses.push_back(f());
  }
  for (std::size_t i = 10; i < losses.size(); ++i) CHECK(losses[i] <= losses[i - 1]);
  CHECK(losses.back() < 1e-3);
}

TEST_CASE("xavier initialisation") {
  std::mt19937_64 rng(9);
  Dense d(64, 64);
  d.init(rng);
  const double bound = std::sqrt(6.0 / 128.0);
  for (double w : d.weight().value) CHECK(std::abs(w) <= bound);
  for (double b : d.bias().value) CHECK(b == 0.0);

  std::vector<double> draws(100000);
  xavier_uniform(draws, 300, 200, rng);
  double mean = 0.0, var = 0.0;
  for (double v : draws) mean += v / draws.size();
  for (double v : draws) var += (v - mean) * (v - mean) / draws.size();
  CHECK(var == doctest::Approx(2.0 / 500.0).epsilon(0.05));

  std::mt19937_64 r1(3), r2(3);
  Dense a(10, 5), b(10, 5);
  a.init(r1);
  b.init(r2);
  CHECK(a.weight().value == b.weight().value);
}

TEST_CASE("softmax cross entropy closed forms") {
  const Tensor uniform({1, 7}, std::vector<double>(7, 2.5));
  CHECK(softmax_cross_entropy(uniform, {3}).value == doctest::Approx(std::log(7.0)).epsilon(1e-12));
  const Tensor sharp({1, 3}, {50.0, 0.0, -10.0});
  CHECK(softmax_cross_entropy(sharp, {0}).value < 1e-20);
  const Tensor huge({1, 2}, {1000.0, 999.0});
  CHECK(std::isfinite(softmax_cross_entropy(huge, {1}).value));
}

TEST_CASE("softmax sums to one and ignores a common shift") {
  std::mt19937_64 rng(10);
  const Tensor z = random_tensor({4, 6}, rng, -5, 5);
  Tensor shifted = z;
  for (auto& v : shifted.data) v += 123.0;
  const Tensor p = softmax(z), q = softmax(shifted);
  for (int n = 0; n < 4; ++n) {
    double s = 0.0;
    for (int i = 0; i < 6; ++i) s += p.sample(n)[i];
    CHECK(std::abs(s - 1.0) < 1e-9);
  }
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(p.data[i] - q.data[i]) < 1e-12);
}

TEST_CASE("weighted bce closed form and validation") {
  const Tensor o({1, 32, 32, 16}, 0.5), t({1, 32, 32, 16}, 0.0);
  const double lr = weighted_bce(o, t, 0.9).value;
  long double independent = 0.0L;
  for (int i = 0; i < 16384; ++i) independent += -(1.0L - 0.9L) * std::log(1.0L - 0.5L);
  CHECK(std::abs(lr - static_cast<double>(independent)) < 1e-9);
  CHECK(std::abs(lr - (-16384.0 * 0.1 * std::log(0.5))) < 1e-9);
  Tensor bad = t;
  bad.data[5] = 0.5;
  CHECK_THROWS_AS(weighted_bce(o, bad, 0.9), std::invalid_argument);
  CHECK(combined_loss(1.5, 0.25, 200.0) == 51.5);
}

TEST_CASE("loss gradients pass finite differences") {
  std::mt19937_64 rng(11);
  Tensor logits = random_tensor({3, 5}, rng, -3, 3);
  const std::vector<int> labels{4, 0, 2};
  GradCheckReport r1;
  const auto ce = softmax_cross_entropy(logits, labels);
  check_entries(logits.data, ce.grad.data, [&] { return softmax_cross_entropy(logits, labels).value; }, "ce", r1);
  CHECK(r1.max_rel_error < 1e-6);

  Tensor out = random_tensor({2, 10}, rng, 0.05, 0.95);
  Tensor target({2, 10});
  for (std::size_t i = 0; i < target.size(); ++i) target.data[i] = i % 3 == 0;
  for (bool per_element : {false, true}) {
    GradCheckReport r2;
    const auto bce = weighted_bce(out, target, 0.7, per_element);
    check_entries(out.data, bce.grad.data, [&] { return weighted_bce(out, target, 0.7, per_element).value; }, "bce", r2);
    CHECK(r2.max_rel_error < 1e-6);
  }
}

TEST_CASE("eval forward is bitwise deterministic") {
  std::mt19937_64 rng(12);
  Sequential net;
  net.add<Conv3d>(1, 2);
  net.add<BatchNorm>(2);
  net.add<Relu>();
  net.add<Flatten>();
  net.add<Dense>(2 * 64, 4);
  net.add<Dropout>(0.5);
  net.init(rng);
  const Tensor x = random_tensor({2, 1, 4, 4, 4}, rng);
  CHECK(net.forward(x, Mode::eval).data == net.forward(x, Mode::eval).data);
}

TEST_CASE("dropout zeroes the configured ratio and rescales survivors") {
  Dropout d(0.3, 5);
  const Tensor x({1, 100000}, 1.0);
  const Tensor y = d.forward(x, Mode::train);
  std::size_t zeros = 0;
  for (double v : y.data) {
    if (v == 0.0)
      ++zeros;
    else
      CHECK(v == doctest::Approx(1.0 / 0.7));
  }
  CHECK(std::abs(zeros / 1e5 - 0.3) <= 0.02 * 0.3);
  CHECK(d.forward(x, Mode::eval).data == x.data);
}

TEST_CASE("checkpoint round trip is bit exact and validates the architecture") {
  std::mt19937_64 rng(13);
  auto build = [] {
    Sequential n;
    n.add<Conv3d>(1, 2);
    n.add<BatchNorm>(2);
    n.add<Relu>();
    n.add<Flatten>();
    n.add<Dense>(2 * 8, 3);
    return n;
  };
  Sequential a = build();
  a.init(rng);
  a.forward(random_tensor({2, 1, 2, 2, 2}, rng), Mode::train);  // moves the running stats
  std::stringstream first;
  save_checkpoint(first, a);
  const std::string bytes = first.str();
  CHECK(bytes.substr(0, 4) == "SMNN");

  Sequential b = build();
  std::stringstream in(bytes);
  load_checkpoint(in, b);
  std::stringstream second;
  save_checkpoint(second, b);
  CHECK(second.str() == bytes);
  const auto pa = a.params(), pb = b.params();
  for (std::size_t k = 0; k < pa.size(); ++k)
    for (std::size_t i = 0; i < pa[k]->value.size(); ++i)
      CHECK(pb[k]->value[i] == static_cast<double>(static_cast<float>(pa[k]->value[i])));

  Sequential wrong;
  wrong.add<Conv3d>(1, 3);
  wrong.add<BatchNorm>(3);
  wrong.add<Relu>();
  wrong.add<Flatten>();
  wrong.add<Dense>(3 * 8, 3);
  std::stringstream in2(bytes);
  CHECK_THROWS_AS(load_checkpoint(in2, wrong), std::runtime_error);
}

TEST_CASE("misuse is reported") {
  Dense d(3, 2);
  CHECK_THROWS_AS(d.backward(Tensor({1, 2})), std::logic_error);
  d.forward(Tensor({1, 3}), Mode::eval);
  CHECK_THROWS_AS(d.backward(Tensor({1, 2})), std::logic_error);
  Sequential net;
  net.add<Flatten>();
  net.add<Dense>(5, 2);
  try {
    net.output_shape({2, 2});
    FAIL("expected a shape error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("dense(5->2)") != std::string::npos);
  }
}

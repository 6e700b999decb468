#include <doctest.h>

#include <cmath>
#include <cstring>
#include <sstream>

#include "oracles.hpp"
#include "vgai/nn/checkpoint.hpp"
#include "vgai/nn/gradient_check.hpp"
#include "vgai/nn/layers.hpp"
#include "vgai/nn/optim.hpp"

using namespace vgai;
using namespace vgai::nn;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(-scale, scale);
  return t;
}

void randomize(std::vector<Param*> params, Rng& rng, double scale = 0.5) {
  for (Param* p : params)
    for (double& v : p->value.values()) v = rng.uniform(-scale, scale);
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Checks input and parameter gradients of loss = <c, layer(x)>.
template <typename L>
void check_layer_gradients(L& layer, const Tensor& x, Rng& rng, double tol) {
  LayerCache cache;
  const Tensor y = layer.forward(x, cache);
  const Tensor c = random_tensor(y.shape(), rng);
  std::vector<Param*> params;
  if constexpr (requires { layer.params(); }) params = layer.params();
  for (Param* p : params) p->zero_grad();
  const Tensor gx = layer.backward(c, cache);

  auto loss_at = [&](std::span<const double> xs) {
    Tensor xi(x.shape(), std::vector<double>(xs.begin(), xs.end()));
    LayerCache tmp;
    return dot(c, layer.forward(xi, tmp));
  };
  CHECK(gradient_check(loss_at, x.values(), gx.values()) < tol);
  if (!params.empty()) {
    auto loss = [&] {
      LayerCache tmp;
      return dot(c, layer.forward(x, tmp));
    };
    CHECK(gradient_check(loss, params) < tol);
  }
}

}  // namespace

TEST_SUITE("nn") {
  TEST_CASE("dense examples") {
    Dense d(1, 1);
    d.weight().value[0] = 2.0;
    LayerCache cache;
    const Tensor y = d.forward(Tensor({1}, {3.0}), cache);
    CHECK(y[0] == 6.0);
    const Tensor gx = d.backward(Tensor({1}, {1.0}), cache);
    CHECK(gx[0] == 2.0);
    CHECK(d.weight().grad[0] == 3.0);
    CHECK(d.bias().grad[0] == 1.0);

    Dense id(3, 3);
    for (int i = 0; i < 3; ++i) id.weight().value[static_cast<std::size_t>(i * 3 + i)] = 1.0;
    const Tensor x({3}, {1.5, -2.0, 0.25});
    CHECK(id.forward(x, cache).values()[1] == -2.0);
    CHECK_THROWS_AS(id.forward(Tensor({4}), cache), std::invalid_argument);
  }

  TEST_CASE("dense gradient check") {
    Rng rng(1);
    Dense d(5, 4);
    randomize(d.params(), rng);
    check_layer_gradients(d, random_tensor({5}, rng), rng, 1e-6);
  }

  TEST_CASE("conv: 1x1 identity and support counting") {
    Conv2d one(1, 1, 1, 1, 1, 0);
    one.weight().value[0] = 1.0;
    Rng rng(2);
    const Tensor x = random_tensor({1, 4, 5}, rng);
    LayerCache cache;
    const Tensor y = one.forward(x, cache);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(y[i] == x[i]);

    Conv2d ones(1, 1, 3, 1, 1, 1);
    ones.weight().value.fill(1.0);
    const Tensor c({1, 4, 5}, 2.5);
    const Tensor z = ones.forward(c, cache);
    CHECK(z.at(0, 1, 1) == doctest::Approx(9 * 2.5));
    CHECK(z.at(0, 0, 0) == doctest::Approx(4 * 2.5));
    CHECK(z.at(0, 3, 4) == doctest::Approx(4 * 2.5));
    CHECK(z.at(0, 0, 2) == doctest::Approx(6 * 2.5));
  }

  TEST_CASE("conv matches the direct-definition oracle across strides") {
    Rng rng(3);
    for (int sw : {1, 2}) {
      for (int sh : {1, 2}) {
        Conv2d conv(2, 3, 3, sh, sw, 1);
        randomize(conv.params(), rng);
        const Tensor x = random_tensor({2, 5, 7}, rng);
        LayerCache cache;
        const Tensor y = conv.forward(x, cache);
        const Tensor want = oracle::conv2d(x, conv.weight().value, conv.bias().value, sh, sw, 1);
        REQUIRE(y.shape() == want.shape());
        for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::abs(y[i] - want[i]) < 1e-12);
      }
    }
  }

  TEST_CASE("conv gradient check on 1x4x6") {
    Rng rng(4);
    Conv2d conv(1, 2, 3, 1, 1, 1);
    randomize(conv.params(), rng);
    check_layer_gradients(conv, random_tensor({1, 4, 6}, rng), rng, 1e-5);
    Conv2d strided(2, 2, 3, 1, 2, 1);
    randomize(strided.params(), rng);
    check_layer_gradients(strided, random_tensor({2, 3, 8}, rng), rng, 1e-5);
  }

  TEST_CASE("residual block: zero convs pass relu(x); gradients; shapes") {
    Rng rng(5);
    ResidualBlock same(3, 3, 1);
    CHECK_FALSE(same.has_projection());
    const Tensor x = random_tensor({3, 4, 6}, rng);
    LayerCache cache;
    const Tensor y = same.forward(x, cache);
    CHECK(y.shape() == x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(y[i] == std::max(0.0, x[i]));

    randomize(same.params(), rng);
    check_layer_gradients(same, x, rng, 1e-5);

    ResidualBlock proj(2, 4, 2);
    CHECK(proj.has_projection());
    randomize(proj.params(), rng);
    const Tensor x2 = random_tensor({2, 3, 8}, rng);
    CHECK(proj.forward(x2, cache).shape() == std::vector<int>{4, 3, 4});
    check_layer_gradients(proj, x2, rng, 1e-5);
  }

  TEST_CASE("vertical average pooling") {
    VerticalAvgPool pool;
    LayerCache cache;
    const Tensor x({1, 2, 2}, {1, 3, 5, 7});
    const Tensor y = pool.forward(x, cache);
    CHECK(y.shape() == std::vector<int>{1, 1, 2});
    CHECK(y[0] == 3.0);
    CHECK(y[1] == 5.0);
    Rng rng(6);
    const Tensor flat = random_tensor({2, 1, 5}, rng);
    const Tensor same = pool.forward(flat, cache);
    for (std::size_t i = 0; i < flat.size(); ++i) CHECK(same[i] == flat[i]);
    check_layer_gradients(pool, random_tensor({3, 4, 5}, rng), rng, 1e-6);
  }

  TEST_CASE("relu, flatten and l1 loss") {
    Relu relu;
    LayerCache cache;
    const Tensor y = relu.forward(Tensor({2}, {-1, 2}), cache);
    CHECK(y[0] == 0.0);
    CHECK(y[1] == 2.0);
    Flatten flat;
    Rng rng(7);
    const Tensor x = random_tensor({2, 3, 4}, rng);
    CHECK(flat.forward(x, cache).shape() == std::vector<int>{24});
    CHECK(flat.backward(Tensor({24}, 1.0), cache).shape() == x.shape());

    const auto l = l1_loss(Tensor({2}, {1, 2}), Tensor({2}, {0, 0}));
    CHECK(l.value == 3.0);
    CHECK(l.grad[0] == 1.0);
    CHECK(l.grad[1] == 1.0);
    const auto z = l1_loss(Tensor({2}, {0.5, -1}), Tensor({2}, {0.5, -1}));
    CHECK(z.value == 0.0);
    CHECK(z.grad[0] == 0.0);
    CHECK(z.grad[1] == 0.0);
    CHECK_THROWS(l1_loss(Tensor({2}), Tensor({3})));
  }

  TEST_CASE("adam: zero gradient keeps parameters; constant gradient steps approach lr") {
    Param p("w", Tensor({3}, {1.0, -2.0, 0.5}));
    std::vector<Param*> params{&p};
    auto state = make_optimizer_state(params);
    adam_step(params, state);
    CHECK(p.value[0] == 1.0);
    CHECK(p.value[1] == -2.0);

    p.grad.fill(0.7);
    state = make_optimizer_state(params);
    double last = 0.0;
    for (int i = 0; i < 200; ++i) {
      const double before = p.value[0];
      adam_step(params, state);
      last = before - p.value[0];
    }
    CHECK(last == doctest::Approx(1e-3).epsilon(1e-4));
  }

  TEST_CASE("sequential network gradient check and shape inference") {
    Rng rng(8);
    const std::vector<LayerSpec> specs{{LayerKind::kResidualBlock, 1, 2, 3, 1, 2, 1},
                                       {LayerKind::kVerticalAvgPool, 0, 0, 0, 1, 1, 0},
                                       {LayerKind::kFlatten, 0, 0, 0, 1, 1, 0},
                                       {LayerKind::kDense, 8, 4, 0, 1, 1, 0},
                                       {LayerKind::kRelu, 0, 0, 0, 1, 1, 0},
                                       {LayerKind::kDense, 4, 3, 0, 1, 1, 0}};
    CHECK(infer_output_shape(specs, {1, 3, 8}) == std::vector<int>{3});
    CHECK_THROWS_AS(infer_output_shape(specs, {1, 3, 10}), std::invalid_argument);
    Sequential net(specs);
    net.initialize(rng);
    const Tensor x = random_tensor({1, 3, 8}, rng);
    const Tensor c = random_tensor({3}, rng);
    Tape tape;
    net.forward(x, tape);
    net.zero_grad();
    const Tensor gx = net.backward(c, tape);
    auto params = net.params();
    CHECK(gradient_check([&] { return dot(c, net.forward(x)); }, params) < 1e-5);
    CHECK(gradient_check(
              [&](std::span<const double> xs) {
                return dot(c, net.forward(Tensor(x.shape(), std::vector<double>(xs.begin(), xs.end()))));
              },
              x.values(), gx.values()) < 1e-5);
  }

  TEST_CASE("zero input, zero biases give zero output") {
    Rng rng(9);
    Sequential net({{LayerKind::kResidualBlock, 1, 4, 3, 1, 1, 1},
                    {LayerKind::kVerticalAvgPool, 0, 0, 0, 1, 1, 0},
                    {LayerKind::kFlatten, 0, 0, 0, 1, 1, 0},
                    {LayerKind::kDense, 16, 5, 0, 1, 1, 0}});
    net.initialize(rng);
    const Tensor y = net.forward(Tensor({1, 2, 4}));
    for (double v : y.values()) CHECK(v == 0.0);
  }

  TEST_CASE("checkpoint round-trips bit for bit") {
    Rng rng(10);
    Sequential net({{LayerKind::kConv, 2, 3, 3, 1, 2, 1},
                    {LayerKind::kFlatten, 0, 0, 0, 1, 1, 0},
                    {LayerKind::kDense, 12, 2, 0, 1, 1, 0}});
    net.initialize(rng);
    net.params()[1]->value[0] = 1.0 / 3.0;
    net.params()[1]->value[1] = -5e-310;  // subnormal
    std::stringstream ss;
    write_network(ss, "probe", net);
    std::string name;
    const Sequential back = read_network(ss, &name);
    CHECK(name == "probe");
    CHECK(back.specs() == net.specs());
    const auto a = net.params();
    const auto b = back.params();
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      CHECK(std::memcmp(a[k]->value.data(), b[k]->value.data(), a[k]->value.size() * sizeof(double)) == 0);
    }
    std::stringstream bad("vgai-network 2\n");
    CHECK_THROWS(read_network(bad));
  }

  TEST_CASE("format_double round trips") {
    Rng rng(12);
    for (int i = 0; i < 1000; ++i) {
      const double v = (rng.uniform() - 0.5) * std::pow(10.0, rng.uniform(-300, 300));
      CHECK(parse_double(format_double(v)) == v);
    }
    CHECK_THROWS(parse_double("1.5x"));
  }
}

#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "mpct/network.hpp"
#include "mpct/trainer.hpp"

using namespace mpct;

namespace {

Matrix batch_from(std::initializer_list<double> values) {
  Matrix m(1, values.size());
  std::size_t j = 0;
  for (double v : values) m(0, j++) = v;
  return m;
}

Network random_mixed_net(std::size_t depth, std::size_t width, SeededRng& rng) {
  Network net;
  for (std::size_t t = 0; t < depth; ++t) {
    Block b = (t % 2 == 0) ? Block::mlp_residual(width) : Block::linear_residual(width);
    for (double& v : b.params) v = 0.3 * rng.normal();
    net.blocks.push_back(std::move(b));
  }
  return net;
}

}  // namespace

TEST_CASE("block_apply: zero residual weights give the identity") {
  Block b = Block::linear_residual(3);
  Matrix x = batch_from({1.0, -2.0, 0.5});
  Matrix y = block_apply(b, x);
  for (std::size_t j = 0; j < 3; ++j) CHECK(y(0, j) == x(0, j));
}

TEST_CASE("block_apply: identity dense block") {
  Block b = Block::linear_dense(2, 2);
  b.params = {1, 0, 0, 1};
  Matrix x = batch_from({3.0, -4.0});
  Matrix y = block_apply(b, x);
  CHECK(y(0, 0) == 3.0);
  CHECK(y(0, 1) == -4.0);
}

TEST_CASE("block_apply: mlp-residual hand evaluation") {
  Block b = Block::mlp_residual(2);
  b.params = {1, 0, 0, 1, 0, 0};  // W=I, b=0
  Matrix y = block_apply(b, batch_from({-1.0, 2.0}));
  CHECK(y(0, 0) == -1.0);  // x + relu(x), relu(-1)=0
  CHECK(y(0, 1) == 4.0);
}

TEST_CASE("block_apply rejects dimension mismatch") {
  Block b = Block::linear_dense(3, 2);
  CHECK_THROWS_AS(block_apply(b, batch_from({1.0, 2.0})), std::invalid_argument);
}

TEST_CASE("forward: trajectory length and identity chains") {
  Network net;
  for (int i = 0; i < 5; ++i) net.blocks.push_back(Block::linear_residual(4));
  Matrix x0(2, 4);
  for (std::size_t i = 0; i < x0.data.size(); ++i) x0.data[i] = static_cast<double>(i);
  Activations acts = forward(net, x0);
  CHECK(acts.states.size() == 6);
  for (const Matrix& s : acts.states) CHECK(s.data == x0.data);
}

TEST_CASE("terminal_loss basics") {
  Network net;
  net.blocks.push_back(Block::linear_residual(2));
  Matrix x0 = batch_from({1.0, 0.0});
  Activations acts = forward(net, x0);
  CHECK(terminal_loss(net, acts, batch_from({1.0, 0.0})) == 0.0);
  CHECK(terminal_loss(net, acts, batch_from({0.0, 0.0})) == doctest::Approx(0.5));
}

TEST_CASE("terminal_loss equals a naive per-sample sum") {
  SeededRng rng(31);
  Network net = random_mixed_net(4, 5, rng);
  Matrix x0 = gaussian_matrix(13, 5, 1.0, rng);
  Matrix y = gaussian_matrix(13, 5, 1.0, rng);
  Activations acts = forward(net, x0);
  const Matrix& xt = acts.states.back();
  double naive = 0.0;
  for (std::size_t i = 0; i < xt.rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < xt.cols; ++j) {
      double d = xt(i, j) - y(i, j);
      s += d * d;
    }
    naive += 0.5 * s;
  }
  naive /= static_cast<double>(xt.rows);
  CHECK(std::abs(terminal_loss(net, acts, y) - naive) <= 1e-12 * std::max(1.0, naive));
}

TEST_CASE("trajectory loss telescopes to terminal loss minus L(x(0))") {
  SeededRng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t depth = 1 + static_cast<std::size_t>(rng.uniform(0.0, 6.0));
    Network net = random_mixed_net(depth, 4, rng);
    Matrix x0 = gaussian_matrix(3, 4, 1.0, rng);
    Matrix y = gaussian_matrix(3, 4, 1.0, rng);
    Activations acts = forward(net, x0);
    double sum = 0.0;
    for (std::size_t t = 0; t < depth; ++t) sum += trajectory_loss(net, acts, y, t);
    double expected = terminal_loss(net, acts, y) - state_loss(acts.states.front(), y);
    CHECK(std::abs(sum - expected) <= 1e-10);
  }
}

TEST_CASE("trajectory loss: identity blocks and T=1") {
  Network net;
  net.blocks.push_back(Block::linear_residual(2));
  net.blocks.push_back(Block::linear_residual(2));
  Matrix x0 = batch_from({0.7, -0.1});
  Matrix y = batch_from({1.0, 1.0});
  Activations acts = forward(net, x0);
  CHECK(trajectory_loss(net, acts, y, 0) == 0.0);
  CHECK(trajectory_loss(net, acts, y, 1) == 0.0);
  CHECK_THROWS_AS(trajectory_loss(net, acts, y, 2), std::out_of_range);

  Network single;
  Block b = Block::linear_dense(2, 2);
  b.params = {2, 0, 0, 2};
  single.blocks.push_back(b);
  Activations a1 = forward(single, x0);
  CHECK(trajectory_loss(single, a1, y, 0) ==
        doctest::Approx(state_loss(a1.states[1], y) - state_loss(a1.states[0], y)));
}

TEST_CASE("block_vjp: linear transposes") {
  Block dense = Block::linear_dense(2, 2);
  dense.params = {1, 2, 3, 4};
  Matrix x = batch_from({0.5, -1.0});
  Matrix up = batch_from({1.0, 1.0});
  VjpResult r = block_vjp(dense, x, up);
  CHECK(r.grad_x(0, 0) == doctest::Approx(1.0 * 1 + 1.0 * 3));
  CHECK(r.grad_x(0, 1) == doctest::Approx(1.0 * 2 + 1.0 * 4));

  Block res = Block::linear_residual(2);
  res.params = {1, 2, 3, 4};
  VjpResult rr = block_vjp(res, x, up);
  CHECK(rr.grad_x(0, 0) == doctest::Approx(1.0 + 4.0));
  CHECK(rr.grad_x(0, 1) == doctest::Approx(1.0 + 6.0));
}

TEST_CASE("block_vjp matches finite differences through a loss") {
  SeededRng rng(23);
  Block b = Block::mlp_residual(4);
  for (double& v : b.params) v = 0.4 * rng.normal();
  Matrix x = gaussian_matrix(3, 4, 1.0, rng);
  Matrix y = gaussian_matrix(3, 4, 1.0, rng);

  // Loss = state_loss(f(x)); upstream = dLoss/df.
  Matrix out = block_apply(b, x);
  VjpResult vjp = block_vjp(b, x, state_loss_grad(out, y));
  const double eps = 1e-5;
  for (std::size_t i = 0; i < b.params.size(); ++i) {
    const double saved = b.params[i];
    b.params[i] = saved + eps;
    const double lp = state_loss(block_apply(b, x), y);
    b.params[i] = saved - eps;
    const double lm = state_loss(block_apply(b, x), y);
    b.params[i] = saved;
    const double fd = (lp - lm) / (2 * eps);
    CHECK(std::abs(vjp.grad_u[i] - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("network JSON round trip is bit-exact") {
  SeededRng rng(3);
  Network net = make_res_mlp(5, 6, 3, 101);
  const std::string text = network_to_json(net);
  Network back = network_from_json(text);
  REQUIRE(back.blocks.size() == net.blocks.size());
  for (std::size_t t = 0; t < net.blocks.size(); ++t) {
    CHECK(back.blocks[t].kind == net.blocks[t].kind);
    CHECK(back.blocks[t].params == net.blocks[t].params);  // exact doubles
  }
}

TEST_CASE("network validation catches bad wiring") {
  Network net;
  net.blocks.push_back(Block::linear_dense(3, 2));
  net.blocks.push_back(Block::linear_dense(3, 2));  // 2 -> 3 mismatch
  CHECK_THROWS_AS(net.validate(), std::invalid_argument);
}

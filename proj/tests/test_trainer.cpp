#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "mpct/trainer.hpp"

#include <json.hpp>

using namespace mpct;

TEST_CASE("gen_linear_dataset: determinism and exact labels") {
  Dataset a = gen_linear_dataset(6, 50, 9);
  Dataset b = gen_linear_dataset(6, 50, 9);
  CHECK(a.inputs.data == b.inputs.data);
  CHECK(a.labels.data == b.labels.data);
  Dataset c = gen_linear_dataset(6, 50, 10);
  CHECK(a.inputs.data != c.inputs.data);
}

TEST_CASE("gen_linear_dataset: input covariance scale") {
  const std::size_t n = 10;
  Dataset d = gen_linear_dataset(n, 10000, 4);
  const double expect = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t j = 0; j < n; ++j) {
    double var = 0.0;
    for (std::size_t i = 0; i < d.samples(); ++i) var += d.inputs(i, j) * d.inputs(i, j);
    var /= static_cast<double>(d.samples());
    CHECK(var == doctest::Approx(expect).epsilon(0.10));
  }
}

TEST_CASE("gen_trig_dataset: noiseless values at x=0 and x=0.5") {
  // Force the noiseless curve by zeroing the noise std.
  Dataset d = gen_trig_dataset(2000, 7, 10, 0.0);
  bool near_zero = false, near_half = false;
  for (std::size_t i = 0; i < d.samples(); ++i) {
    const double x = d.inputs(i, 0);
    if (std::abs(x) < 1e-3) {
      CHECK(d.labels(i, 0) == doctest::Approx(1.0).epsilon(1e-4));
      CHECK(std::abs(d.labels(i, 1)) < 1e-2);
      CHECK(d.labels(i, 2) == doctest::Approx(1.0).epsilon(1e-4));
      near_zero = true;
    }
    if (std::abs(x - 0.5) < 1e-3) {
      CHECK(std::abs(d.labels(i, 0)) < 1e-2);
      CHECK(d.labels(i, 1) == doctest::Approx(1.0).epsilon(1e-4));
      CHECK(d.labels(i, 2) == doctest::Approx(-1.0).epsilon(1e-4));
      near_half = true;
    }
    for (std::size_t j = 1; j < 10; ++j) CHECK(d.inputs(i, j) == 0.0);  // declared pad
  }
  CHECK(near_zero);
  CHECK(near_half);
}

TEST_CASE("gen_trig_dataset: noise magnitude matches the configured std") {
  Dataset noisy = gen_trig_dataset(10000, 3, 10, 0.03);
  Dataset clean = gen_trig_dataset(10000, 3, 10, 0.0);
  // Same x-stream cannot be assumed across the two calls (the noise draw
  // interleaves), so measure the radial deviation |y|/|y0| - 1 directly:
  // |y| = |1+eps| * |y0| with |y0| = sqrt(2).
  double var = 0.0;
  for (std::size_t i = 0; i < noisy.samples(); ++i) {
    double norm = 0.0;
    for (std::size_t j = 0; j < 4; ++j) norm += noisy.labels(i, j) * noisy.labels(i, j);
    const double eps = std::sqrt(norm / 2.0) - 1.0;
    var += eps * eps;
  }
  const double std_measured = std::sqrt(var / static_cast<double>(noisy.samples()));
  CHECK(std_measured == doctest::Approx(0.03).epsilon(0.15));
  (void)clean;
}

TEST_CASE("whiten: identity covariance afterwards and stored transform") {
  Dataset d = gen_linear_dataset(5, 4000, 21);
  Dataset w = whiten(d);
  const std::size_t n = 5;
  Matrix cov(n, n);
  for (std::size_t i = 0; i < w.samples(); ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) cov(j, k) += w.inputs(i, j) * w.inputs(i, k);
  for (double& v : cov.data) v /= static_cast<double>(w.samples());
  double fro = 0.0;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < n; ++k) {
      const double d2 = cov(j, k) - (j == k ? 1.0 : 0.0);
      fro += d2 * d2;
    }
  CHECK(std::sqrt(fro) <= 1e-8);
  CHECK(w.labels.data == d.labels.data);  // labels untouched
  CHECK(nlohmann::json::parse(w.metadata_json).contains("whitening_cholesky_factor"));

  // Whitening an already-white dataset keeps the covariance at identity.
  Dataset w2 = whiten(w);
  Matrix cov2(n, n);
  for (std::size_t i = 0; i < w2.samples(); ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) cov2(j, k) += w2.inputs(i, j) * w2.inputs(i, k);
  for (double& v : cov2.data) v /= static_cast<double>(w2.samples());
  for (std::size_t j = 0; j < n; ++j) CHECK(cov2(j, j) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("whiten: singular covariance reports the deficient pivot") {
  Dataset d = gen_trig_dataset(100, 1, 4, 0.0);  // padded columns are all zero
  CHECK_THROWS_WITH_AS(whiten(d), doctest::Contains("rank"), std::invalid_argument);
}

TEST_CASE("whiten: Phi recomputation matches X^T Y / N") {
  Dataset d = gen_linear_dataset(4, 500, 33);
  Dataset w = whiten(d);
  // Phi = X^T Y / N computed two ways (column loops vs sample loops).
  const std::size_t n = 4;
  Matrix phi1(n, n), phi2(n, n);
  for (std::size_t i = 0; i < w.samples(); ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) phi1(j, k) += w.inputs(i, j) * w.labels(i, k);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t i = 0; i < w.samples(); ++i) phi2(j, k) += w.inputs(i, j) * w.labels(i, k);
    }
  for (std::size_t i = 0; i < phi1.data.size(); ++i)
    CHECK(phi1.data[i] == doctest::Approx(phi2.data[i]).epsilon(1e-12));
}

TEST_CASE("train_sgd: zero learning rate freezes the loss") {
  Dataset d = gen_linear_dataset(4, 200, 2);
  Network net = make_linear_residual_net(3, 4, 8);
  TrainConfig cfg;
  cfg.horizon = 3;
  cfg.learning_rate = 0.0;
  cfg.batch_size = 50;
  cfg.epochs = 5;
  cfg.seed = 1;
  TrainResult res = train_sgd(net, d, cfg);
  REQUIRE(res.record.losses.size() == 6);
  for (double l : res.record.losses) CHECK(l == res.record.losses.front());
}

TEST_CASE("train_sgd: full-horizon descent on a convex single block") {
  Dataset d = gen_linear_dataset(3, 300, 5);
  Network net;
  Block b = Block::linear_dense(3, 3);
  net.blocks.push_back(b);  // zero init
  TrainConfig cfg;
  cfg.horizon = 1;
  cfg.learning_rate = 0.05;
  cfg.batch_size = 300;  // full batch
  cfg.epochs = 20;
  cfg.seed = 3;
  TrainResult res = train_sgd(net, d, cfg);
  for (std::size_t e = 1; e < res.record.losses.size(); ++e)
    CHECK(res.record.losses[e] <= res.record.losses[e - 1] + 1e-12);
}

TEST_CASE("train_sgd: determinism and paired shuffles across horizons") {
  Dataset d = gen_trig_dataset(400, 11, 10, 0.03);
  Network net = make_res_mlp(5, 10, 4, 77);
  TrainConfig cfg;
  cfg.horizon = 2;
  cfg.learning_rate = 0.01;
  cfg.batch_size = 100;
  cfg.epochs = 3;
  cfg.seed = 9;
  TrainResult a = train_sgd(net, d, cfg);
  TrainResult b = train_sgd(net, d, cfg);
  CHECK(a.record.losses == b.record.losses);  // bitwise identical
  for (std::size_t t = 0; t < net.depth(); ++t)
    CHECK(a.net.blocks[t].params == b.net.blocks[t].params);
}

TEST_CASE("train_sgd: learning-rate trace is non-increasing in x0.9 steps") {
  Dataset d = gen_trig_dataset(500, 13, 10, 0.03);
  Network net = make_res_mlp(6, 10, 4, 3);
  TrainConfig cfg;
  cfg.horizon = 1;
  cfg.learning_rate = 0.05;  // aggressive on purpose so decays trigger
  cfg.batch_size = 100;
  cfg.epochs = 25;
  cfg.seed = 7;
  TrainResult res = train_sgd(net, d, cfg);
  bool any_drop = false;
  for (std::size_t e = 1; e < res.record.lrs.size(); ++e) {
    const double prev = res.record.lrs[e - 1], cur = res.record.lrs[e];
    CHECK(cur <= prev);
    if (cur < prev) {
      CHECK(cur == doctest::Approx(prev * 0.9).epsilon(1e-12));
      any_drop = true;
    }
  }
  (void)any_drop;  // drops depend on the trajectory; the ratio is what matters
}

TEST_CASE("train_sgd: loco algorithm runs and trains") {
  Dataset d = gen_linear_dataset(4, 300, 17);
  Network net = make_linear_residual_net(6, 4, 23);
  TrainConfig cfg;
  cfg.algorithm = TrainAlgorithm::Loco;
  cfg.stage_ends = {2, 4, 6};
  cfg.learning_rate = 0.01;
  cfg.batch_size = 100;
  cfg.epochs = 5;
  cfg.seed = 2;
  TrainResult res = train_sgd(net, d, cfg);
  CHECK(res.record.losses.back() < res.record.losses.front());
}

TEST_CASE("loss_rate examples") {
  TrainRecord full{{1.0, 0.5, 0.25}, {0.1, 0.1, 0.1}, false};
  CHECK(loss_rate(full, full, 2) == doctest::Approx(1.0));

  TrainRecord half{{1.0, 0.8, 0.5}, {0.1, 0.1, 0.1}, false};
  CHECK(loss_rate(half, full, 2) == doctest::Approx(0.5).epsilon(1e-12));

  TrainRecord stuck{{1.0, 1.0, 1.0}, {0.1, 0.1, 0.1}, false};
  CHECK(loss_rate(stuck, full, 2) == doctest::Approx(0.0));
  CHECK_THROWS_AS(loss_rate(full, stuck, 2), std::invalid_argument);
}

TEST_CASE("train record CSV shape") {
  TrainRecord rec{{1.0, 0.5}, {0.1, 0.1}, false};
  const std::string csv = train_record_to_csv(rec);
  CHECK(csv.rfind("epoch,loss,lr\n", 0) == 0);
}

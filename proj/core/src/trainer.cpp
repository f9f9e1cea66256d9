#include "mpct/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

namespace mpct {

Dataset gen_linear_dataset(std::size_t n, std::size_t samples, std::uint64_t seed) {
  if (n == 0 || samples == 0) throw std::invalid_argument("gen_linear_dataset: empty shape");
  SeededRng rng(seed);
  const double std = std::pow(static_cast<double>(n), -0.25);  // variance n^{-1/2}
  const Matrix w0 = gaussian_matrix(n, n, std, rng);
  Dataset data;
  data.kind = "linear";
  data.seed = seed;
  data.inputs = gaussian_matrix(samples, n, std, rng);
  data.labels = Matrix(samples, n);
  for (std::size_t i = 0; i < samples; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += w0(j, k) * data.inputs(i, k);
      data.labels(i, j) = acc;
    }
  nlohmann::json meta;
  meta["n"] = n;
  meta["samples"] = samples;
  meta["rng"] = SeededRng::kAlgorithm;
  data.metadata_json = meta.dump();
  return data;
}

Dataset gen_trig_dataset(std::size_t samples, std::uint64_t seed, std::size_t input_width,
                         double noise_std) {
  if (samples == 0) throw std::invalid_argument("gen_trig_dataset: empty");
  if (input_width < 1) throw std::invalid_argument("gen_trig_dataset: width");
  SeededRng rng(seed);
  Dataset data;
  data.kind = "trig";
  data.seed = seed;
  data.inputs = Matrix(samples, input_width);
  data.labels = Matrix(samples, 4);
  const double pi = std::numbers::pi;
  for (std::size_t i = 0; i < samples; ++i) {
    const double x = rng.uniform(-2.0, 2.0);
    const double eps = noise_std > 0.0 ? noise_std * rng.normal() : 0.0;
    data.inputs(i, 0) = x;  // remaining columns stay zero (declared pad)
    const double s = 1.0 + eps;
    data.labels(i, 0) = s * std::cos(pi * x);
    data.labels(i, 1) = s * std::sin(pi * x);
    data.labels(i, 2) = s * std::cos(2.0 * pi * x);
    data.labels(i, 3) = s * std::sin(2.0 * pi * x);
  }
  nlohmann::json meta;
  meta["samples"] = samples;
  meta["input_width"] = input_width;
  meta["input_embedding"] = "zero-pad";
  meta["noise_std"] = noise_std;
  meta["rng"] = SeededRng::kAlgorithm;
  data.metadata_json = meta.dump();
  return data;
}

Dataset whiten(const Dataset& data) {
  const std::size_t n = data.inputs.cols;
  const std::size_t samples = data.inputs.rows;
  Matrix cov(n, n);
  for (std::size_t i = 0; i < samples; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k)
        cov(j, k) += data.inputs(i, j) * data.inputs(i, k);
  for (double& v : cov.data) v /= static_cast<double>(samples);

  // Cholesky cov = L L^T; x' = L^{-1} x gives identity covariance.
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = cov(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (!(diag > 1e-12))
      throw std::invalid_argument("whiten: singular input covariance at rank " +
                                  std::to_string(j));
    l(j, j) = std::sqrt(diag);
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = cov(i, j);
      for (std::size_t k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
      l(i, j) = v / l(j, j);
    }
  }
  Dataset out = data;
  for (std::size_t i = 0; i < samples; ++i) {
    // Forward substitution of L w = x per sample.
    auto row = out.inputs.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      double v = row[j];
      for (std::size_t k = 0; k < j; ++k) v -= l(j, k) * row[k];
      row[j] = v / l(j, j);
    }
  }
  nlohmann::json meta =
      data.metadata_json.empty() ? nlohmann::json::object() : nlohmann::json::parse(data.metadata_json);
  nlohmann::json lj = nlohmann::json::array();
  char buf[64];
  for (double v : l.data) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    lj.push_back(std::string(buf));
  }
  meta["whitening_cholesky_factor"] = std::move(lj);
  out.metadata_json = meta.dump();
  return out;
}

namespace {

Matrix slice_rows(const Matrix& m, const std::vector<std::size_t>& idx, std::size_t begin,
                  std::size_t end) {
  Matrix out(end - begin, m.cols);
  for (std::size_t i = begin; i < end; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) out(i - begin, j) = m(idx[i], j);
  return out;
}

}  // namespace

TrainResult train_sgd(Network net, const Dataset& data, const TrainConfig& config) {
  net.validate();
  // epochs == 0 is allowed: the record then holds only the initial loss.
  if (config.batch_size == 0 || !(config.learning_rate >= 0.0))
    throw std::invalid_argument("train_sgd: bad config");
  const std::size_t samples = data.samples();
  TrainResult result;
  TrainRecord& record = result.record;
  double lr = config.learning_rate;

  auto full_loss = [&](const Network& n) {
    return terminal_loss(n, forward(n, data.inputs), data.labels);
  };

  record.losses.push_back(full_loss(net));  // J0 before any update
  record.lrs.push_back(lr);

  std::vector<std::size_t> perm(samples);
  for (std::size_t i = 0; i < samples; ++i) perm[i] = i;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    // Shuffle stream depends only on (seed, epoch): paired runs across
    // horizons see identical minibatches.
    SeededRng shuffle_rng = SeededRng(config.seed).child(epoch);
    for (std::size_t i = samples; i-- > 1;) {
      const std::size_t j =
          static_cast<std::size_t>(shuffle_rng.uniform01() * static_cast<double>(i + 1));
      std::swap(perm[i], perm[std::min(j, i)]);
    }
    for (std::size_t begin = 0; begin + config.batch_size <= samples;
         begin += config.batch_size) {
      const Matrix xb = slice_rows(data.inputs, perm, begin, begin + config.batch_size);
      const Matrix yb = slice_rows(data.labels, perm, begin, begin + config.batch_size);
      HorizonGradient grad;
      if (config.algorithm == TrainAlgorithm::Mpc) {
        grad = horizon_gradient(net, xb, yb, config.horizon);
      } else {
        BlockGrouping grouping{config.stage_ends};
        grad = loco_gradient(net, grouping, xb, yb);
      }
      for (std::size_t t = 0; t < net.depth(); ++t) {
        auto& params = net.blocks[t].params;
        const auto& g = grad.per_block[t];
        for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * g[i];
      }
    }
    const double loss = full_loss(net);
    if (!std::isfinite(loss)) {
      record.diverged = true;
      record.losses.push_back(loss);
      record.lrs.push_back(lr);
      break;
    }
    if (loss > record.losses.back()) lr *= config.lr_decay;
    record.losses.push_back(loss);
    record.lrs.push_back(lr);
  }
  result.net = std::move(net);
  return result;
}

double loss_rate(const TrainRecord& record_h, const TrainRecord& record_t, std::size_t tau) {
  if (tau >= record_h.losses.size() || tau >= record_t.losses.size())
    throw std::out_of_range("loss_rate: tau out of range");
  const double j0h = record_h.initial_loss();
  const double j0t = record_t.initial_loss();
  if (!(j0h > 0.0) || !(j0t > 0.0) || !(record_h.losses[tau] > 0.0) ||
      !(record_t.losses[tau] > 0.0))
    throw std::invalid_argument("loss_rate: losses must be positive");
  const double denom = std::log(record_t.losses[tau] / j0t);
  if (denom == 0.0) throw std::invalid_argument("loss_rate: undefined rate, J_T(tau) == J0");
  return std::log(record_h.losses[tau] / j0h) / denom;
}

std::string train_record_to_csv(const TrainRecord& record) {
  std::string out = "epoch,loss,lr\n";
  char buf[128];
  for (std::size_t e = 0; e < record.losses.size(); ++e) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", e, record.losses[e], record.lrs[e]);
    out += buf;
  }
  return out;
}

Network make_res_mlp(std::size_t depth, std::size_t width, std::size_t out_dim,
                     std::uint64_t seed) {
  if (depth < 2) throw std::invalid_argument("make_res_mlp: depth must be >= 2");
  SeededRng rng(seed);
  // Depth-scaled residual init: each branch contributes O(1/T) so deep stacks
  // keep activations (and with them the initial loss) bounded.
  const double std = 1.0 / std::sqrt(static_cast<double>(width * depth));
  Network net;
  for (std::size_t t = 0; t + 1 < depth; ++t) {
    Block b = Block::mlp_residual(width);
    const Matrix w = gaussian_matrix(width, width, std, rng);
    std::copy(w.data.begin(), w.data.end(), b.params.begin());  // biases stay zero
    net.blocks.push_back(std::move(b));
  }
  Block head = Block::linear_dense(width, out_dim);
  const double head_std = 1.0 / std::sqrt(static_cast<double>(width));
  const Matrix w = gaussian_matrix(out_dim, width, head_std, rng);
  std::copy(w.data.begin(), w.data.end(), head.params.begin());
  net.blocks.push_back(std::move(head));
  net.validate();
  return net;
}

Network make_linear_residual_net(std::size_t depth, std::size_t width, std::uint64_t seed) {
  SeededRng rng(seed);
  const double std = 1.0 / std::sqrt(static_cast<double>(width * depth));
  Network net;
  for (std::size_t t = 0; t < depth; ++t) {
    Block b = Block::linear_residual(width);
    const Matrix w = gaussian_matrix(width, width, std, rng);
    b.params.assign(w.data.begin(), w.data.end());
    net.blocks.push_back(std::move(b));
  }
  net.validate();
  return net;
}

}  // namespace mpct

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mpct/gradients.hpp"
#include "mpct/network.hpp"
#include "mpct/numerics.hpp"

namespace mpct {

struct Dataset {
  Matrix inputs;  // samples x input_dim
  Matrix labels;  // samples x label_dim
  std::string kind;
  std::uint64_t seed = 0;
  std::string metadata_json;  // generator parameters, pads, transforms

  std::size_t samples() const { return inputs.rows; }
};

/// y = W0 x with W0 and x entries from N(0, n^{-1/2}) (variance n^{-1/2}).
Dataset gen_linear_dataset(std::size_t n, std::size_t samples, std::uint64_t seed);

/// Scalar x ~ U[-2,2], y = (1+eps)(cos pi x, sin pi x, cos 2pi x, sin 2pi x),
/// eps ~ N(0, 0.03^2) per sample. The input is zero-padded to input_width
/// (pad recorded in metadata). noise_std lets tests force eps = 0.
Dataset gen_trig_dataset(std::size_t samples, std::uint64_t seed,
                         std::size_t input_width = 10, double noise_std = 0.03);

/// Transform inputs so the empirical uncentered covariance is the identity
/// (Cholesky whitening); labels untouched, transform stored in metadata.
/// Throws on a singular covariance, naming the deficient pivot.
Dataset whiten(const Dataset& data);

enum class TrainAlgorithm { Mpc, Loco };

struct TrainConfig {
  TrainAlgorithm algorithm = TrainAlgorithm::Mpc;
  std::size_t horizon = 1;               // Mpc
  std::vector<std::size_t> stage_ends;   // Loco
  double learning_rate = 0.01;
  std::size_t batch_size = 100;
  std::size_t epochs = 40;
  std::uint64_t seed = 0;
  double lr_decay = 0.9;
};

struct TrainRecord {
  std::vector<double> losses;  // epochs+1 entries, losses[0] = J0
  std::vector<double> lrs;     // learning-rate trace, same length
  bool diverged = false;

  double initial_loss() const { return losses.front(); }
};

struct TrainResult {
  Network net;
  TrainRecord record;
};

/// Minibatch SGD with horizon-h (or grouped two-window) gradients. The
/// learning rate drops by lr_decay after any epoch whose mean loss exceeds
/// the previous epoch's. The shuffle stream depends only on config.seed and
/// the epoch, so runs with different horizons see identical batch orders.
TrainResult train_sgd(Network net, const Dataset& data, const TrainConfig& config);

/// r(h) = ln(J_h(tau)/J0) / ln(J_T(tau)/J0). Throws when the denominator is
/// zero (no progress under the full horizon).
double loss_rate(const TrainRecord& record_h, const TrainRecord& record_t, std::size_t tau);

/// CSV `epoch,loss,lr`, 17 significant digits.
std::string train_record_to_csv(const TrainRecord& record);

/// Standard desk-scale architectures.
/// 15-block residual MLP: mlp-residual blocks of the given width with a
/// final linear-dense head to out_dim; Gaussian N(0, width^{-1/2}) weights,
/// zero biases.
Network make_res_mlp(std::size_t depth, std::size_t width, std::size_t out_dim,
                     std::uint64_t seed);

/// Linear residual chain x + Wx of uniform width.
Network make_linear_residual_net(std::size_t depth, std::size_t width, std::uint64_t seed);

}  // namespace mpct

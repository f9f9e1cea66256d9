#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mpct/numerics.hpp"

namespace mpct {

enum class BlockKind { LinearDense, LinearResidual, MlpResidual };

std::string to_string(BlockKind kind);
BlockKind block_kind_from_string(const std::string& s);

/// One dynamic step f_t(x,u). Parameters are the row-major weight matrix
/// followed by the bias when present.
struct Block {
  BlockKind kind = BlockKind::LinearDense;
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  bool has_bias = false;
  std::vector<double> params;

  std::size_t param_count() const {
    return input_dim * output_dim + (has_bias ? output_dim : 0);
  }

  static Block linear_dense(std::size_t in, std::size_t out, bool bias = false);
  static Block linear_residual(std::size_t n);
  static Block mlp_residual(std::size_t n);
};

/// Block-structured feed-forward model with MSE terminal loss.
struct Network {
  std::vector<Block> blocks;

  std::size_t depth() const { return blocks.size(); }  // T
  std::size_t input_dim() const { return blocks.front().input_dim; }
  std::size_t output_dim() const { return blocks.back().output_dim; }
  std::size_t total_params() const;

  void validate() const;  // throws std::invalid_argument on bad wiring
};

/// Recorded trajectory x(0..T) of one forward pass; each state is a batch
/// (samples x dim).
struct Activations {
  std::vector<Matrix> states;
};

/// Batches are Matrix values: one sample per row.
Matrix block_apply(const Block& block, const Matrix& x);

Activations forward(const Network& net, const Matrix& x0);

/// Batch-mean MSE 0.5*|x - y~|^2 at an arbitrary state. Labels narrower than
/// the state are zero-padded (the identity projection of the loss onto the
/// leading coordinates); wider labels are an error.
double state_loss(const Matrix& state, const Matrix& y);

/// d(state_loss)/d(state): (x_i - y~_i)/B per sample row.
Matrix state_loss_grad(const Matrix& state, const Matrix& y);

/// Batch-mean MSE at x(T); label dimension must equal the output dimension.
double terminal_loss(const Network& net, const Activations& acts, const Matrix& y);

/// Split trajectory loss l(t) = L(x(t+1)) - L(x(t)).
double trajectory_loss(const Network& net, const Activations& acts, const Matrix& y,
                       std::size_t t);

struct VjpResult {
  Matrix grad_x;                // batch, same shape as x
  std::vector<double> grad_u;  // summed over the batch (upstream carries 1/B)
};

/// Reverse-mode primitive: grad_x = (df/dx)^T upstream, grad_u = (df/du)^T
/// upstream. ReLU subgradient at exactly 0 is 0.
VjpResult block_vjp(const Block& block, const Matrix& x, const Matrix& upstream);

/// JSON serialization. Parameter values are encoded as hex-float strings so
/// the round trip is bit-exact for 64-bit floats.
std::string network_to_json(const Network& net);
Network network_from_json(const std::string& text);

}  // namespace mpct

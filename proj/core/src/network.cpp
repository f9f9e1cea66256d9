#include "mpct/network.hpp"

#include <cstdio>
#include <cstdlib>
#include <stdexcept>

#include <json.hpp>

namespace mpct {

std::string to_string(BlockKind kind) {
  switch (kind) {
    case BlockKind::LinearDense: return "linear-dense";
    case BlockKind::LinearResidual: return "linear-residual";
    case BlockKind::MlpResidual: return "mlp-residual";
  }
  throw std::logic_error("unknown block kind");
}

BlockKind block_kind_from_string(const std::string& s) {
  if (s == "linear-dense") return BlockKind::LinearDense;
  if (s == "linear-residual") return BlockKind::LinearResidual;
  if (s == "mlp-residual") return BlockKind::MlpResidual;
  throw std::invalid_argument("unknown block kind: " + s);
}

Block Block::linear_dense(std::size_t in, std::size_t out, bool bias) {
  Block b;
  b.kind = BlockKind::LinearDense;
  b.input_dim = in;
  b.output_dim = out;
  b.has_bias = bias;
  b.params.assign(b.param_count(), 0.0);
  return b;
}

Block Block::linear_residual(std::size_t n) {
  Block b;
  b.kind = BlockKind::LinearResidual;
  b.input_dim = n;
  b.output_dim = n;
  b.has_bias = false;
  b.params.assign(b.param_count(), 0.0);
  return b;
}

Block Block::mlp_residual(std::size_t n) {
  Block b;
  b.kind = BlockKind::MlpResidual;
  b.input_dim = n;
  b.output_dim = n;
  b.has_bias = true;
  b.params.assign(b.param_count(), 0.0);
  return b;
}

std::size_t Network::total_params() const {
  std::size_t total = 0;
  for (const Block& b : blocks) total += b.param_count();
  return total;
}

void Network::validate() const {
  if (blocks.empty()) throw std::invalid_argument("network: needs at least one block");
  for (std::size_t t = 0; t < blocks.size(); ++t) {
    const Block& b = blocks[t];
    if (b.kind != BlockKind::LinearDense && b.input_dim != b.output_dim)
      throw std::invalid_argument("network: residual block requires input_dim == output_dim");
    if (b.kind == BlockKind::LinearResidual && b.has_bias)
      throw std::invalid_argument("network: linear-residual block has no bias");
    if (b.kind == BlockKind::MlpResidual && !b.has_bias)
      throw std::invalid_argument("network: mlp-residual block requires bias");
    if (b.params.size() != b.param_count())
      throw std::invalid_argument("network: parameter vector length mismatch");
    if (t + 1 < blocks.size() && b.output_dim != blocks[t + 1].input_dim)
      throw std::invalid_argument("network: adjacent block dims incompatible");
  }
}

Matrix block_apply(const Block& block, const Matrix& x) {
  if (x.cols != block.input_dim)
    throw std::invalid_argument("block_apply: input dimension mismatch");
  const std::size_t in = block.input_dim, out = block.output_dim;
  const double* w = block.params.data();                 // out x in, row-major
  const double* bias = block.has_bias ? w + out * in : nullptr;
  Matrix y(x.rows, out);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const auto xi = x.row(i);
    auto yi = y.row(i);
    for (std::size_t j = 0; j < out; ++j) {
      double z = bias ? bias[j] : 0.0;
      const double* wj = w + j * in;
      for (std::size_t k = 0; k < in; ++k) z += wj[k] * xi[k];
      switch (block.kind) {
        case BlockKind::LinearDense: yi[j] = z; break;
        case BlockKind::LinearResidual: yi[j] = xi[j] + z; break;
        case BlockKind::MlpResidual: yi[j] = xi[j] + (z > 0.0 ? z : 0.0); break;
      }
    }
  }
  return y;
}

Activations forward(const Network& net, const Matrix& x0) {
  if (x0.cols != net.input_dim())
    throw std::invalid_argument("forward: input dimension mismatch");
  Activations acts;
  acts.states.reserve(net.depth() + 1);
  acts.states.push_back(x0);
  for (const Block& b : net.blocks)
    acts.states.push_back(block_apply(b, acts.states.back()));
  return acts;
}

double state_loss(const Matrix& state, const Matrix& y) {
  if (y.rows != state.rows) throw std::invalid_argument("state_loss: batch size mismatch");
  if (y.cols > state.cols) throw std::invalid_argument("state_loss: label wider than state");
  double acc = 0.0;
  for (std::size_t i = 0; i < state.rows; ++i) {
    for (std::size_t j = 0; j < state.cols; ++j) {
      const double target = j < y.cols ? y(i, j) : 0.0;
      const double d = state(i, j) - target;
      acc += d * d;
    }
  }
  return 0.5 * acc / static_cast<double>(state.rows);
}

Matrix state_loss_grad(const Matrix& state, const Matrix& y) {
  if (y.rows != state.rows) throw std::invalid_argument("state_loss_grad: batch size mismatch");
  if (y.cols > state.cols) throw std::invalid_argument("state_loss_grad: label wider than state");
  const double inv_b = 1.0 / static_cast<double>(state.rows);
  Matrix g(state.rows, state.cols);
  for (std::size_t i = 0; i < state.rows; ++i)
    for (std::size_t j = 0; j < state.cols; ++j) {
      const double target = j < y.cols ? y(i, j) : 0.0;
      g(i, j) = (state(i, j) - target) * inv_b;
    }
  return g;
}

double terminal_loss(const Network& net, const Activations& acts, const Matrix& y) {
  if (y.cols != net.output_dim())
    throw std::invalid_argument("terminal_loss: label dimension mismatch");
  return state_loss(acts.states.back(), y);
}

double trajectory_loss(const Network& net, const Activations& acts, const Matrix& y,
                       std::size_t t) {
  if (t >= net.depth()) throw std::out_of_range("trajectory_loss: block index out of range");
  return state_loss(acts.states[t + 1], y) - state_loss(acts.states[t], y);
}

VjpResult block_vjp(const Block& block, const Matrix& x, const Matrix& upstream) {
  if (x.cols != block.input_dim)
    throw std::invalid_argument("block_vjp: input dimension mismatch");
  if (upstream.cols != block.output_dim || upstream.rows != x.rows)
    throw std::invalid_argument("block_vjp: upstream shape mismatch");
  const std::size_t in = block.input_dim, out = block.output_dim;
  const double* w = block.params.data();
  VjpResult res;
  res.grad_x = Matrix(x.rows, in);
  res.grad_u.assign(block.param_count(), 0.0);
  double* gw = res.grad_u.data();
  double* gb = block.has_bias ? gw + out * in : nullptr;
  std::vector<double> z(out);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const auto xi = x.row(i);
    const auto ui = upstream.row(i);
    auto gi = res.grad_x.row(i);
    if (block.kind == BlockKind::MlpResidual) {
      const double* bias = w + out * in;
      for (std::size_t j = 0; j < out; ++j) {
        double zj = bias[j];
        const double* wj = w + j * in;
        for (std::size_t k = 0; k < in; ++k) zj += wj[k] * xi[k];
        z[j] = zj;
      }
    }
    for (std::size_t j = 0; j < out; ++j) {
      double uj = ui[j];
      if (block.kind == BlockKind::MlpResidual && z[j] <= 0.0) uj = 0.0;
      if (block.kind != BlockKind::LinearDense) gi[j] += ui[j];  // residual path
      if (uj == 0.0) continue;
      const double* wj = w + j * in;
      double* gwj = gw + j * in;
      for (std::size_t k = 0; k < in; ++k) {
        gi[k] += uj * wj[k];
        gwj[k] += uj * xi[k];
      }
      if (gb) gb[j] += uj;
    }
  }
  return res;
}

namespace {

std::string double_to_hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

double hex_to_double(const std::string& s) {
  return std::strtod(s.c_str(), nullptr);
}

}  // namespace

std::string network_to_json(const Network& net) {
  nlohmann::json doc;
  doc["format"] = "mpct-network-v1";
  doc["blocks"] = nlohmann::json::array();
  for (const Block& b : net.blocks) {
    nlohmann::json jb;
    jb["kind"] = to_string(b.kind);
    jb["input_dim"] = b.input_dim;
    jb["output_dim"] = b.output_dim;
    jb["has_bias"] = b.has_bias;
    nlohmann::json params = nlohmann::json::array();
    for (double v : b.params) params.push_back(double_to_hex(v));
    jb["params"] = std::move(params);
    doc["blocks"].push_back(std::move(jb));
  }
  return doc.dump(2);
}

Network network_from_json(const std::string& text) {
  nlohmann::json doc = nlohmann::json::parse(text);
  if (doc.value("format", "") != "mpct-network-v1")
    throw std::invalid_argument("network_from_json: unknown format");
  Network net;
  for (const auto& jb : doc.at("blocks")) {
    Block b;
    b.kind = block_kind_from_string(jb.at("kind").get<std::string>());
    b.input_dim = jb.at("input_dim").get<std::size_t>();
    b.output_dim = jb.at("output_dim").get<std::size_t>();
    b.has_bias = jb.at("has_bias").get<bool>();
    for (const auto& v : jb.at("params")) b.params.push_back(hex_to_double(v.get<std::string>()));
    net.blocks.push_back(std::move(b));
  }
  net.validate();
  return net;
}

}  // namespace mpct

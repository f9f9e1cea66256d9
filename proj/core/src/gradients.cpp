#include "mpct/gradients.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace mpct {

std::vector<double> HorizonGradient::concatenated() const {
  std::vector<double> out;
  std::size_t total = 0;
  for (const auto& g : per_block) total += g.size();
  out.reserve(total);
  for (const auto& g : per_block) out.insert(out.end(), g.begin(), g.end());
  return out;
}

namespace {

// grad of state_loss(x(end_state), y) w.r.t. u(t), sweeping blocks
// end_state-1 .. t over the recorded trajectory. Optionally also collects
// the gradients of every block inside the sweep (accumulated into `collect`).
std::vector<double> reverse_sweep(const Network& net, const Activations& acts, const Matrix& y,
                                  std::size_t t, std::size_t end_state,
                                  std::vector<std::vector<double>>* collect = nullptr) {
  Matrix upstream = state_loss_grad(acts.states[end_state], y);
  std::vector<double> grad_t;
  for (std::size_t s = end_state; s-- > t;) {
    VjpResult vjp = block_vjp(net.blocks[s], acts.states[s], upstream);
    if (collect) {
      auto& acc = (*collect)[s];
      if (acc.empty()) acc = vjp.grad_u;
      else
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += vjp.grad_u[i];
    }
    if (s == t) grad_t = std::move(vjp.grad_u);
    else upstream = std::move(vjp.grad_x);
  }
  return grad_t;
}

}  // namespace

HorizonGradient horizon_gradient(const Network& net, const Activations& acts, const Matrix& y,
                                 std::size_t h) {
  const std::size_t depth = net.depth();
  if (h < 1 || h > depth) throw std::out_of_range("horizon_gradient: h out of range");
  HorizonGradient out;
  out.horizon = h;
  out.per_block.resize(depth);
  for (std::size_t t = 0; t < depth; ++t) {
    const std::size_t end_state = std::min(t + h, depth);
    out.per_block[t] = reverse_sweep(net, acts, y, t, end_state);
  }
  return out;
}

HorizonGradient horizon_gradient(const Network& net, const Matrix& x0, const Matrix& y,
                                 std::size_t h) {
  return horizon_gradient(net, forward(net, x0), y, h);
}

void BlockGrouping::validate(std::size_t depth) const {
  if (stage_ends.empty()) throw std::invalid_argument("grouping: empty");
  std::size_t prev = 0;
  for (std::size_t e : stage_ends) {
    if (e <= prev) throw std::invalid_argument("grouping: boundaries must strictly increase");
    prev = e;
  }
  if (stage_ends.back() != depth)
    throw std::invalid_argument("grouping: last boundary must equal the network depth");
}

HorizonGradient loco_gradient(const Network& net, const BlockGrouping& grouping,
                              const Matrix& x0, const Matrix& y) {
  grouping.validate(net.depth());
  const Activations acts = forward(net, x0);
  const std::size_t stages = grouping.stage_count();
  HorizonGradient out;
  out.horizon = 2;
  out.per_block.resize(net.depth());
  for (std::size_t s = 0; s < stages; ++s) {
    const std::size_t begin = grouping.stage_begin(s);
    // Loss windows ending at the next one or two stage boundaries.
    for (std::size_t k = 0; k < 2 && s + k < stages; ++k) {
      const std::size_t end_state = grouping.stage_ends[s + k];
      std::vector<std::vector<double>> collect(net.depth());
      reverse_sweep(net, acts, y, begin, end_state, &collect);
      for (std::size_t t = begin; t < grouping.stage_ends[s]; ++t) {
        auto& acc = out.per_block[t];
        if (acc.empty()) acc = std::move(collect[t]);
        else
          for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += collect[t][i];
      }
    }
  }
  return out;
}

std::vector<double> finite_diff_gradient(const Network& net, const Matrix& x0, const Matrix& y,
                                         std::size_t t, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("finite_diff_gradient: eps must be positive");
  if (t >= net.depth()) throw std::out_of_range("finite_diff_gradient: block index");
  Network probe = net;
  std::vector<double>& u = probe.blocks[t].params;
  std::vector<double> grad(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double saved = u[i];
    u[i] = saved + eps;
    const double lp = terminal_loss(probe, forward(probe, x0), y);
    u[i] = saved - eps;
    const double lm = terminal_loss(probe, forward(probe, x0), y);
    u[i] = saved;
    grad[i] = (lp - lm) / (2.0 * eps);
  }
  return grad;
}

double gradient_angle(const HorizonGradient& gh, const HorizonGradient& gt) {
  const std::vector<double> a = gh.concatenated();
  const std::vector<double> b = gt.concatenated();
  return cosine_similarity(a, b);
}

double rescaled_deviation(const HorizonGradient& gh, const HorizonGradient& gt) {
  const double c = gradient_angle(gh, gt);
  const double sin_theta = std::sqrt(std::max(0.0, 1.0 - c * c));
  return sin_theta * l2_norm(gt.concatenated());
}

MemoryModel MemoryModel::uniform(MemoryMode mode, std::size_t depth, double state_units,
                                 double fixed_overhead) {
  MemoryModel m;
  m.mode = mode;
  m.per_block_activation_units.assign(depth, state_units);
  m.fixed_overhead = fixed_overhead;
  return m;
}

double memory_estimate(const MemoryModel& model, std::size_t h) {
  const std::size_t depth = model.per_block_activation_units.size();
  if (h < 1 || h > depth) throw std::out_of_range("memory_estimate: h out of range");
  for (double u : model.per_block_activation_units)
    if (!(u > 0.0)) throw std::invalid_argument("memory_estimate: state sizes must be positive");
  double peak = 0.0, total = 0.0;
  for (std::size_t t = 0; t < depth; ++t) {
    // Window of block t stores states t+1 .. min(t+h,T), i.e. the outputs of
    // blocks t .. min(t+h,T)-1.
    const std::size_t end = std::min(t + h, depth);
    double window = 0.0;
    for (std::size_t s = t; s < end; ++s) window += model.per_block_activation_units[s];
    peak = std::max(peak, window);
    total += window;
  }
  return model.fixed_overhead + (model.mode == MemoryMode::Eager ? peak : total);
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::string out = "epoch,h,cos_theta,sin_deviation,grad_norm_h,grad_norm_T\n";
  char buf[256];
  for (const SweepRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%zu,%zu,%.17g,%.17g,%.17g,%.17g\n", r.epoch, r.h,
                  r.cos_theta, r.sin_deviation, r.grad_norm_h, r.grad_norm_t);
    out += buf;
  }
  return out;
}

}  // namespace mpct

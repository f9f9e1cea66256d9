#pragma once

#include <string>
#include <vector>

#include "mpct/network.hpp"

namespace mpct {

/// Per-block parameter gradients {g_h(u(t))}_{t=0..T-1} for one horizon.
struct HorizonGradient {
  std::size_t horizon = 0;
  std::vector<std::vector<double>> per_block;
  std::string batch_id;

  std::vector<double> concatenated() const;
};

/// Truncated-horizon gradient family: for each block t,
/// g_h(u(t)) = grad_{u(t)} L(x(min(t+h,T))), from one shared forward pass
/// with reverse sweeps of length <= h.
HorizonGradient horizon_gradient(const Network& net, const Matrix& x0, const Matrix& y,
                                 std::size_t h);

/// Same, reusing an already-recorded trajectory of `net` on the same batch.
HorizonGradient horizon_gradient(const Network& net, const Activations& acts, const Matrix& y,
                                 std::size_t h);

/// Stage partition of the blocks [0,T): stage s spans
/// [s == 0 ? 0 : stage_ends[s-1], stage_ends[s]); last entry must equal T.
struct BlockGrouping {
  std::vector<std::size_t> stage_ends;

  std::size_t stage_count() const { return stage_ends.size(); }
  std::size_t stage_begin(std::size_t s) const { return s == 0 ? 0 : stage_ends[s - 1]; }
  void validate(std::size_t depth) const;
};

/// Grouped-stage scheme: every stage's gradient counts the losses at the next
/// two stage boundaries (only the available ones near the end of the net).
HorizonGradient loco_gradient(const Network& net, const BlockGrouping& grouping,
                              const Matrix& x0, const Matrix& y);

/// Central finite differences of L(x(T)) w.r.t. u(t), one coordinate at a
/// time. Oracle only; O(param_count) forward passes.
std::vector<double> finite_diff_gradient(const Network& net, const Matrix& x0, const Matrix& y,
                                         std::size_t t, double eps);

/// cos(theta_h): cosine similarity of the concatenated gradient vectors.
double gradient_angle(const HorizonGradient& gh, const HorizonGradient& gt);

/// min_c |c*g_h - g_T| = sin(theta_h)*|g_T|.
double rescaled_deviation(const HorizonGradient& gh, const HorizonGradient& gt);

enum class MemoryMode { Eager, Static };

/// Activation-storage accountant in abstract units.
/// per_block_activation_units[t] is the size of the stored output state
/// x(t+1) of block t.
struct MemoryModel {
  MemoryMode mode = MemoryMode::Eager;
  std::vector<double> per_block_activation_units;
  double fixed_overhead = 0.0;

  static MemoryModel uniform(MemoryMode mode, std::size_t depth, double state_units,
                             double fixed_overhead = 0.0);
};

/// Eager: fixed overhead plus the peak single-window storage (affine a*h+b
/// when all state sizes are equal). Static: fixed overhead plus the total
/// storage of all windows, which sums to Sum_t (min(t+h,T)-t) units for unit
/// state sizes, matching the h(T-h+1) leading term.
double memory_estimate(const MemoryModel& model, std::size_t h);

struct SweepRow {
  std::size_t epoch = 0;
  std::size_t h = 0;
  double cos_theta = 0.0;
  double sin_deviation = 0.0;
  double grad_norm_h = 0.0;
  double grad_norm_t = 0.0;
};

/// CSV with header epoch,h,cos_theta,sin_deviation,grad_norm_h,grad_norm_T;
/// 17 significant digits.
std::string sweep_to_csv(const std::vector<SweepRow>& rows);

}  // namespace mpct

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mpct/gradients.hpp"
#include "mpct/numerics.hpp"
#include "mpct/trainer.hpp"

namespace mpct {

/// Measured and fitted cos(theta_h) and M(h) over a horizon subset H.
struct HorizonProfile {
  std::size_t depth = 0;  // T
  std::vector<std::size_t> measured_horizons;
  std::map<std::size_t, double> measured_cos;
  std::map<std::size_t, double> measured_mem;
  PolyModel cos_fit;  // degree 3 in h
  PolyModel mem_fit;  // degree 1 in h
  std::size_t skipped_batches = 0;
};

/// Default measured subset {1, ceil(T/4), ceil(T/2), ceil(3T/4), T}.
std::vector<std::size_t> default_horizon_subset(std::size_t depth);

/// Fit the degree-3 cos and degree-1 memory polynomials from measured maps.
void fit_profile(HorizonProfile& profile);

/// Measures mean cos(theta_h) over minibatches of `data` against the full
/// horizon, plus the memory accountant, then fits. Degenerate (zero-gradient)
/// batches are skipped and counted; all-degenerate is an error.
HorizonProfile build_profile(const Network& net, const Dataset& data,
                             const std::vector<std::size_t>& horizons, std::size_t batches,
                             std::size_t batch_size, const MemoryModel& mem_model);

/// r_hat(h) = clamp(cos_fit(h), -1, 1)^2.
double estimate_rate(const HorizonProfile& profile, std::size_t h);

enum class CostKind { Linear, Ladder };

/// Memory-to-cost map: linear c*M/M0 or ladder c*ceil(M/M0).
struct CostFn {
  CostKind kind = CostKind::Linear;
  double unit_cost = 1.0;   // c
  double node_memory = 1.0; // M0
};

double cost_value(const CostFn& fn, double memory_units);

enum class ObjectiveKind { AccuracyConstraint, Weighted };

struct Objective {
  ObjectiveKind kind = ObjectiveKind::AccuracyConstraint;
  double epsilon = 0.1;  // accuracy constraint: r(h) >= 1-epsilon
  double lambda = 1.0;   // weighted: minimize -r(h) + lambda*C(M(h))
};

struct SelectionRow {
  std::size_t h = 0;
  std::optional<double> measured_cos;
  double fitted_cos = 0.0;
  std::optional<double> measured_mem;
  double fitted_mem = 0.0;
  double r_hat = 0.0;
  double cost = 0.0;
  double objective_value = 0.0;
  bool feasible = true;
};

struct SelectionResult {
  std::size_t h_star = 0;  // 0 when infeasible
  bool feasible = false;
  std::vector<SelectionRow> table;
};

/// Exhaustive scan over h = 1..T. Accuracy constraint: cheapest feasible h
/// (infeasibility is flagged, never silently answered). Weighted: argmin of
/// -r_hat + lambda*cost. Ties break toward smaller h.
SelectionResult select_horizon(const HorizonProfile& profile, const Objective& objective,
                               const CostFn& costfn);

/// CSV `h,measured_cos,fitted_cos,measured_mem,fitted_mem,r_hat,cost,
/// objective_value,feasible` (blank fields for unmeasured horizons).
std::string selection_table_to_csv(const SelectionResult& result);

/// Human-readable selection report.
std::string selection_report(const HorizonProfile& profile, const Objective& objective,
                             const CostFn& costfn, const SelectionResult& result);

/// Min-max normalization of objective values across algorithms (Rel of the
/// best is 0, of the worst finite one is 1); infeasible entries (nullopt) map
/// to 1.5. All-equal finite values map to 0.
std::map<std::string, double> relative_performance(
    const std::map<std::string, std::optional<double>>& objective_values);

}  // namespace mpct

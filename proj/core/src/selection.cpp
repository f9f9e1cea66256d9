#include "mpct/selection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace mpct {

std::vector<std::size_t> default_horizon_subset(std::size_t depth) {
  auto ceil_frac = [depth](std::size_t num, std::size_t den) {
    return (depth * num + den - 1) / den;
  };
  std::vector<std::size_t> h = {1, ceil_frac(1, 4), ceil_frac(1, 2), ceil_frac(3, 4), depth};
  std::sort(h.begin(), h.end());
  h.erase(std::unique(h.begin(), h.end()), h.end());
  return h;
}

void fit_profile(HorizonProfile& profile) {
  if (profile.measured_cos.size() < 4)
    throw std::invalid_argument("fit_profile: need at least 4 cos measurements for the cubic");
  if (profile.measured_mem.size() < 2)
    throw std::invalid_argument("fit_profile: need at least 2 memory measurements");
  std::vector<double> xs, ys;
  for (const auto& [h, c] : profile.measured_cos) {
    xs.push_back(static_cast<double>(h));
    ys.push_back(c);
  }
  profile.cos_fit = polyfit(xs, ys, 3);
  xs.clear();
  ys.clear();
  for (const auto& [h, m] : profile.measured_mem) {
    xs.push_back(static_cast<double>(h));
    ys.push_back(m);
  }
  profile.mem_fit = polyfit(xs, ys, 1);
}

HorizonProfile build_profile(const Network& net, const Dataset& data,
                             const std::vector<std::size_t>& horizons, std::size_t batches,
                             std::size_t batch_size, const MemoryModel& mem_model) {
  if (batches < 1 || batch_size < 1) throw std::invalid_argument("build_profile: empty batches");
  const std::size_t depth = net.depth();
  HorizonProfile profile;
  profile.depth = depth;
  profile.measured_horizons = horizons;
  for (std::size_t h : horizons) {
    if (h < 1 || h > depth) throw std::out_of_range("build_profile: horizon out of range");
    profile.measured_mem[h] = memory_estimate(mem_model, h);
  }

  std::vector<double> cos_sum(horizons.size(), 0.0);
  std::size_t used = 0;
  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t begin = (b * batch_size) % data.samples();
    const std::size_t end = std::min(begin + batch_size, data.samples());
    Matrix xb(end - begin, data.inputs.cols), yb(end - begin, data.labels.cols);
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t j = 0; j < xb.cols; ++j) xb(i - begin, j) = data.inputs(i, j);
      for (std::size_t j = 0; j < yb.cols; ++j) yb(i - begin, j) = data.labels(i, j);
    }
    const Activations acts = forward(net, xb);
    const HorizonGradient g_full = horizon_gradient(net, acts, yb, depth);
    if (l2_norm(g_full.concatenated()) == 0.0) {
      ++profile.skipped_batches;
      continue;
    }
    bool ok = true;
    std::vector<double> cos_batch(horizons.size());
    for (std::size_t i = 0; i < horizons.size(); ++i) {
      const HorizonGradient gh = horizon_gradient(net, acts, yb, horizons[i]);
      if (l2_norm(gh.concatenated()) == 0.0) {
        ok = false;
        break;
      }
      cos_batch[i] = gradient_angle(gh, g_full);
    }
    if (!ok) {
      ++profile.skipped_batches;
      continue;
    }
    for (std::size_t i = 0; i < horizons.size(); ++i) cos_sum[i] += cos_batch[i];
    ++used;
  }
  if (used == 0)
    throw std::invalid_argument("build_profile: every batch had a degenerate gradient");
  for (std::size_t i = 0; i < horizons.size(); ++i)
    profile.measured_cos[horizons[i]] = cos_sum[i] / static_cast<double>(used);
  fit_profile(profile);
  return profile;
}

double estimate_rate(const HorizonProfile& profile, std::size_t h) {
  double c = polyeval(profile.cos_fit, static_cast<double>(h));
  c = std::clamp(c, -1.0, 1.0);
  return c * c;
}

double cost_value(const CostFn& fn, double memory_units) {
  if (memory_units < 0.0) throw std::invalid_argument("cost_value: negative memory");
  const double ratio = memory_units / fn.node_memory;
  return fn.kind == CostKind::Linear ? fn.unit_cost * ratio : fn.unit_cost * std::ceil(ratio);
}

SelectionResult select_horizon(const HorizonProfile& profile, const Objective& objective,
                               const CostFn& costfn) {
  SelectionResult result;
  bool have_best = false;
  double best_key = 0.0;
  for (std::size_t h = 1; h <= profile.depth; ++h) {
    SelectionRow row;
    row.h = h;
    if (auto it = profile.measured_cos.find(h); it != profile.measured_cos.end())
      row.measured_cos = it->second;
    if (auto it = profile.measured_mem.find(h); it != profile.measured_mem.end())
      row.measured_mem = it->second;
    row.fitted_cos = polyeval(profile.cos_fit, static_cast<double>(h));
    row.fitted_mem = polyeval(profile.mem_fit, static_cast<double>(h));
    row.r_hat = estimate_rate(profile, h);
    row.cost = cost_value(costfn, std::max(0.0, row.fitted_mem));
    if (objective.kind == ObjectiveKind::AccuracyConstraint) {
      row.feasible = row.r_hat >= 1.0 - objective.epsilon;
      row.objective_value = row.cost;
    } else {
      row.feasible = true;
      row.objective_value = -row.r_hat + objective.lambda * row.cost;
    }
    if (row.feasible && (!have_best || row.objective_value < best_key)) {
      have_best = true;
      best_key = row.objective_value;
      result.h_star = h;
    }
    result.table.push_back(row);
  }
  result.feasible = have_best;
  if (!have_best) result.h_star = 0;
  return result;
}

std::string selection_table_to_csv(const SelectionResult& result) {
  std::string out =
      "h,measured_cos,fitted_cos,measured_mem,fitted_mem,r_hat,cost,objective_value,feasible\n";
  char buf[512];
  for (const SelectionRow& r : result.table) {
    char mc[40] = "", mm[40] = "";
    if (r.measured_cos) std::snprintf(mc, sizeof(mc), "%.17g", *r.measured_cos);
    if (r.measured_mem) std::snprintf(mm, sizeof(mm), "%.17g", *r.measured_mem);
    std::snprintf(buf, sizeof(buf), "%zu,%s,%.17g,%s,%.17g,%.17g,%.17g,%.17g,%d\n", r.h, mc,
                  r.fitted_cos, mm, r.fitted_mem, r.r_hat, r.cost, r.objective_value,
                  r.feasible ? 1 : 0);
    out += buf;
  }
  return out;
}

std::string selection_report(const HorizonProfile& profile, const Objective& objective,
                             const CostFn& costfn, const SelectionResult& result) {
  char buf[256];
  std::string out;
  out += "horizon selection report\n";
  std::snprintf(buf, sizeof(buf), "T=%zu\n", profile.depth);
  out += buf;
  if (objective.kind == ObjectiveKind::AccuracyConstraint)
    std::snprintf(buf, sizeof(buf), "objective=accuracy_constraint epsilon=%.17g\n",
                  objective.epsilon);
  else
    std::snprintf(buf, sizeof(buf), "objective=weighted lambda=%.17g\n", objective.lambda);
  out += buf;
  std::snprintf(buf, sizeof(buf), "cost=%s c=%.17g M0=%.17g\n",
                costfn.kind == CostKind::Linear ? "linear" : "ladder", costfn.unit_cost,
                costfn.node_memory);
  out += buf;
  out += "cos_fit=";
  for (double c : profile.cos_fit.coefficients) {
    std::snprintf(buf, sizeof(buf), " %.17g", c);
    out += buf;
  }
  out += "\nmem_fit=";
  for (double c : profile.mem_fit.coefficients) {
    std::snprintf(buf, sizeof(buf), " %.17g", c);
    out += buf;
  }
  out += "\n";
  if (result.feasible)
    std::snprintf(buf, sizeof(buf), "h_star=%zu\nfeasible=1\n", result.h_star);
  else
    std::snprintf(buf, sizeof(buf), "h_star=none\nfeasible=0\n");
  out += buf;
  return out;
}

std::map<std::string, double> relative_performance(
    const std::map<std::string, std::optional<double>>& objective_values) {
  if (objective_values.size() < 2)
    throw std::invalid_argument("relative_performance: need at least 2 entries");
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (const auto& [name, value] : objective_values) {
    if (!value) continue;
    if (!any) {
      lo = hi = *value;
      any = true;
    } else {
      lo = std::min(lo, *value);
      hi = std::max(hi, *value);
    }
  }
  if (!any) throw std::invalid_argument("relative_performance: no finite entries");
  std::map<std::string, double> rel;
  for (const auto& [name, value] : objective_values) {
    if (!value) rel[name] = 1.5;  // infeasible runs pinned at 1.5
    else if (hi == lo) rel[name] = 0.0;
    else rel[name] = (*value - lo) / (hi - lo);
  }
  return rel;
}

}  // namespace mpct

// mpct: reproducible horizon-gradient experiments emitting CSV artifacts.
//
// Every subcommand reads a versioned JSON config, runs deterministically from
// its seed, and writes its outputs plus a manifest (tool version, RNG
// identifier, config echo, per-file content hashes) into --out. Files are
// written atomically and contain no timestamps, so re-running a command with
// the same config and seed reproduces every byte.

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mpct/gradients.hpp"
#include "mpct/lintheory.hpp"
#include "mpct/network.hpp"
#include "mpct/numerics.hpp"
#include "mpct/selection.hpp"
#include "mpct/trainer.hpp"

using json = nlohmann::json;
using namespace mpct;

namespace {

// ---------------------------------------------------------------------------
// Small utilities
// ---------------------------------------------------------------------------

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string fnv1a64_hex(const std::string& bytes) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016" PRIx64, fnv1a64(bytes));
  return buf;
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string hex_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

double parse_hex_double(const std::string& s) { return std::strtod(s.c_str(), nullptr); }

void atomic_write(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Strict config parsing: unknown keys are errors
// ---------------------------------------------------------------------------

constexpr const char* kConfigSchema = "mpct-config-v1";

[[noreturn]] void config_error(const std::string& msg) {
  throw std::invalid_argument("config: " + msg);
}

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) config_error(where + " must be an object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (item.key() == a) ok = true;
    if (!ok) config_error("unknown key '" + item.key() + "' in " + where);
  }
}

const json& need(const json& j, const std::string& where, const char* key) {
  if (!j.contains(key)) config_error(where + " is missing '" + std::string(key) + "'");
  return j.at(key);
}

// ---------------------------------------------------------------------------
// Artifact collection + manifest
// ---------------------------------------------------------------------------

struct Run {
  std::filesystem::path out_dir;
  std::string command;
  std::uint64_t seed = 0;
  json config_echo;
  std::map<std::string, std::string> file_hashes;

  void emit(const std::string& name, const std::string& content) {
    atomic_write(out_dir / name, content);
    file_hashes[name] = fnv1a64_hex(content);
  }

  void write_manifest() const {
    json m;
    m["tool"] = "mpct";
    m["version"] = MPCT_VERSION;
    m["rng"] = SeededRng::kAlgorithm;
    m["command"] = command;
    m["seed"] = seed;
    m["config"] = config_echo;
    m["files"] = file_hashes;
    atomic_write(out_dir / "manifest.json", m.dump(2) + "\n");
  }
};

// ---------------------------------------------------------------------------
// Dataset / network / model specs
// ---------------------------------------------------------------------------

std::string dataset_to_json_text(const Dataset& d) {
  json j;
  j["format"] = "mpct-dataset-v1";
  j["kind"] = d.kind;
  j["seed"] = d.seed;
  j["metadata"] = d.metadata_json.empty() ? json::object() : json::parse(d.metadata_json);
  auto encode = [](const Matrix& m) {
    json out;
    out["rows"] = m.rows;
    out["cols"] = m.cols;
    json vals = json::array();
    for (double v : m.data) vals.push_back(hex_double(v));
    out["data"] = std::move(vals);
    return out;
  };
  j["inputs"] = encode(d.inputs);
  j["labels"] = encode(d.labels);
  return j.dump(2) + "\n";
}

Dataset dataset_from_json_text(const std::string& text) {
  const json j = json::parse(text);
  if (need(j, "dataset file", "format") != "mpct-dataset-v1")
    config_error("unsupported dataset file format");
  Dataset d;
  d.kind = j.at("kind").get<std::string>();
  d.seed = j.at("seed").get<std::uint64_t>();
  d.metadata_json = j.at("metadata").dump();
  auto decode = [](const json& mj) {
    Matrix m(mj.at("rows").get<std::size_t>(), mj.at("cols").get<std::size_t>());
    const json& vals = mj.at("data");
    if (vals.size() != m.data.size()) config_error("dataset matrix size mismatch");
    for (std::size_t i = 0; i < m.data.size(); ++i)
      m.data[i] = parse_hex_double(vals[i].get<std::string>());
    return m;
  };
  d.inputs = decode(j.at("inputs"));
  d.labels = decode(j.at("labels"));
  return d;
}

Dataset dataset_from_config(const json& spec) {
  if (spec.contains("path")) {
    check_keys(spec, "dataset", {"path", "whiten"});
    Dataset d = dataset_from_json_text(read_file(spec.at("path").get<std::string>()));
    if (spec.value("whiten", false)) d = whiten(d);
    return d;
  }
  check_keys(spec, "dataset",
             {"kind", "samples", "n", "input_width", "noise_std", "seed", "whiten"});
  const std::string kind = need(spec, "dataset", "kind").get<std::string>();
  const std::size_t samples = need(spec, "dataset", "samples").get<std::size_t>();
  const std::uint64_t seed = need(spec, "dataset", "seed").get<std::uint64_t>();
  Dataset d;
  if (kind == "linear") {
    d = gen_linear_dataset(need(spec, "dataset", "n").get<std::size_t>(), samples, seed);
  } else if (kind == "trig") {
    d = gen_trig_dataset(samples, seed, spec.value("input_width", std::size_t{10}),
                         spec.value("noise_std", 0.03));
  } else {
    config_error("dataset kind must be 'linear' or 'trig'");
  }
  if (spec.value("whiten", false)) d = whiten(d);
  return d;
}

Network network_from_config(const json& spec) {
  if (spec.contains("path")) {
    check_keys(spec, "network", {"path"});
    return network_from_json(read_file(spec.at("path").get<std::string>()));
  }
  check_keys(spec, "network", {"kind", "depth", "width", "out_dim", "seed"});
  const std::string kind = need(spec, "network", "kind").get<std::string>();
  const std::size_t depth = need(spec, "network", "depth").get<std::size_t>();
  const std::size_t width = need(spec, "network", "width").get<std::size_t>();
  const std::uint64_t seed = need(spec, "network", "seed").get<std::uint64_t>();
  if (kind == "res-mlp")
    return make_res_mlp(depth, width, need(spec, "network", "out_dim").get<std::size_t>(),
                        seed);
  if (kind == "linear-residual") return make_linear_residual_net(depth, width, seed);
  config_error("network kind must be 'res-mlp' or 'linear-residual'");
}

MemoryModel memory_from_config(const json& spec, std::size_t depth,
                               const std::string& mode_override) {
  check_keys(spec, "memory", {"mode", "state_units", "fixed_overhead"});
  std::string mode = spec.value("mode", std::string("eager"));
  if (!mode_override.empty()) mode = mode_override;
  MemoryMode m;
  if (mode == "eager")
    m = MemoryMode::Eager;
  else if (mode == "static")
    m = MemoryMode::Static;
  else
    config_error("memory mode must be 'eager' or 'static'");
  return MemoryModel::uniform(m, depth, spec.value("state_units", 1.0),
                              spec.value("fixed_overhead", 0.0));
}

TrainConfig train_from_config(const json& spec, std::uint64_t seed) {
  check_keys(spec, "train",
             {"algorithm", "horizon", "stage_ends", "learning_rate", "batch_size", "epochs",
              "lr_decay"});
  TrainConfig cfg;
  const std::string algo = spec.value("algorithm", std::string("mpc"));
  if (algo == "mpc")
    cfg.algorithm = TrainAlgorithm::Mpc;
  else if (algo == "loco")
    cfg.algorithm = TrainAlgorithm::Loco;
  else
    config_error("train algorithm must be 'mpc' or 'loco'");
  cfg.horizon = spec.value("horizon", std::size_t{1});
  if (spec.contains("stage_ends"))
    cfg.stage_ends = spec.at("stage_ends").get<std::vector<std::size_t>>();
  cfg.learning_rate = spec.value("learning_rate", 0.01);
  cfg.batch_size = spec.value("batch_size", std::size_t{100});
  cfg.epochs = spec.value("epochs", std::size_t{40});
  cfg.lr_decay = spec.value("lr_decay", 0.9);
  cfg.seed = seed;
  return cfg;
}

Objective objective_from_config(const json& spec) {
  check_keys(spec, "objective", {"kind", "epsilon", "lambda"});
  Objective obj;
  const std::string kind = need(spec, "objective", "kind").get<std::string>();
  if (kind == "accuracy")
    obj.kind = ObjectiveKind::AccuracyConstraint;
  else if (kind == "weighted")
    obj.kind = ObjectiveKind::Weighted;
  else
    config_error("objective kind must be 'accuracy' or 'weighted'");
  obj.epsilon = spec.value("epsilon", 0.1);
  obj.lambda = spec.value("lambda", 1.0);
  return obj;
}

CostFn cost_from_config(const json& spec) {
  check_keys(spec, "cost", {"kind", "unit_cost", "node_memory"});
  CostFn fn;
  const std::string kind = spec.value("kind", std::string("linear"));
  if (kind == "linear")
    fn.kind = CostKind::Linear;
  else if (kind == "ladder")
    fn.kind = CostKind::Ladder;
  else
    config_error("cost kind must be 'linear' or 'ladder'");
  fn.unit_cost = spec.value("unit_cost", 1.0);
  fn.node_memory = spec.value("node_memory", 1.0);
  return fn;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

void cmd_gen_data(Run& run, const json& cfg) {
  check_keys(cfg, "config", {"schema", "seed", "dataset"});
  const Dataset d = dataset_from_config(need(cfg, "config", "dataset"));
  run.emit("dataset.json", dataset_to_json_text(d));
  json summary;
  summary["kind"] = d.kind;
  summary["samples"] = d.samples();
  summary["input_dim"] = d.inputs.cols;
  summary["label_dim"] = d.labels.cols;
  run.emit("summary.json", summary.dump(2) + "\n");
}

void cmd_train(Run& run, const json& cfg) {
  check_keys(cfg, "config", {"schema", "seed", "dataset", "network", "train"});
  const Dataset data = dataset_from_config(need(cfg, "config", "dataset"));
  Network net = network_from_config(need(cfg, "config", "network"));
  const TrainConfig tc = train_from_config(need(cfg, "config", "train"), run.seed);
  const TrainResult res = train_sgd(std::move(net), data, tc);
  run.emit("train_record.csv", train_record_to_csv(res.record));
  run.emit("network.json", network_to_json(res.net));
  json summary;
  summary["diverged"] = res.record.diverged;
  summary["initial_loss"] = format_real(res.record.initial_loss());
  summary["final_loss"] = format_real(res.record.losses.back());
  summary["dataset_hash"] = fnv1a64_hex(dataset_to_json_text(data));
  run.emit("summary.json", summary.dump(2) + "\n");
  if (res.record.diverged) throw std::runtime_error("training diverged");
}

void cmd_sweep_gradients(Run& run, const json& cfg) {
  check_keys(cfg, "config", {"schema", "seed", "dataset", "network", "sweep"});
  const Dataset data = dataset_from_config(need(cfg, "config", "dataset"));
  const Network init = network_from_config(need(cfg, "config", "network"));
  const json& sw = need(cfg, "config", "sweep");
  check_keys(sw, "sweep", {"horizons", "checkpoint_epochs", "train", "probe_batch"});
  const auto horizons = need(sw, "sweep", "horizons").get<std::vector<std::size_t>>();
  std::vector<std::size_t> checkpoints =
      sw.contains("checkpoint_epochs")
          ? sw.at("checkpoint_epochs").get<std::vector<std::size_t>>()
          : std::vector<std::size_t>{0};
  const std::size_t probe = std::min<std::size_t>(
      sw.value("probe_batch", std::size_t{100}), data.samples());
  TrainConfig tc = sw.contains("train") ? train_from_config(sw.at("train"), run.seed)
                                        : TrainConfig{};
  tc.seed = run.seed;
  tc.horizon = init.depth();  // full-horizon reference trajectory

  Matrix x0(probe, data.inputs.cols), y(probe, data.labels.cols);
  for (std::size_t i = 0; i < probe; ++i) {
    for (std::size_t j = 0; j < x0.cols; ++j) x0(i, j) = data.inputs(i, j);
    for (std::size_t j = 0; j < y.cols; ++j) y(i, j) = data.labels(i, j);
  }

  std::vector<SweepRow> rows;
  for (std::size_t epoch : checkpoints) {
    TrainConfig at = tc;
    at.epochs = epoch;
    const TrainResult snap = train_sgd(init, data, at);
    const Activations acts = forward(snap.net, x0);
    const HorizonGradient gt = horizon_gradient(snap.net, acts, y, snap.net.depth());
    for (std::size_t h : horizons) {
      const HorizonGradient gh = horizon_gradient(snap.net, acts, y, h);
      SweepRow row;
      row.epoch = epoch;
      row.h = h;
      row.cos_theta = gradient_angle(gh, gt);
      row.sin_deviation = rescaled_deviation(gh, gt);
      row.grad_norm_h = l2_norm(gh.concatenated());
      row.grad_norm_t = l2_norm(gt.concatenated());
      rows.push_back(row);
    }
  }
  run.emit("sweep.csv", sweep_to_csv(rows));
}

void cmd_profile_memory(Run& run, const json& cfg, const std::string& mode) {
  check_keys(cfg, "config", {"schema", "seed", "memory", "depth"});
  const std::size_t depth = need(cfg, "config", "depth").get<std::size_t>();
  const MemoryModel model =
      memory_from_config(cfg.value("memory", json::object()), depth, mode);

  std::string csv = "h,memory_units\n";
  std::vector<double> xs, ys;
  for (std::size_t h = 1; h <= depth; ++h) {
    const double m = memory_estimate(model, h);
    csv += std::to_string(h) + "," + format_real(m) + "\n";
    xs.push_back(static_cast<double>(h));
    ys.push_back(m);
  }
  const PolyModel fit = polyfit(xs, ys, 1);
  double residual = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    residual = std::max(residual, std::abs(polyeval(fit, xs[i]) - ys[i]));
  csv += "fit_intercept=" + format_real(fit.coefficients[0]) + "\n";
  csv += "fit_slope=" + format_real(fit.coefficients[1]) + "\n";
  csv += "fit_residual=" + format_real(residual) + "\n";
  run.emit("memory.csv", csv);
  std::printf("mode=%s fit_slope=%s fit_residual=%s\n",
              model.mode == MemoryMode::Eager ? "eager" : "static",
              format_real(fit.coefficients[1]).c_str(), format_real(residual).c_str());
}

HorizonProfile profile_from_config(const json& sel, const json& cfg, std::uint64_t seed) {
  if (sel.contains("measured")) {
    const json& m = sel.at("measured");
    check_keys(m, "selection.measured", {"depth", "horizons", "cos", "mem"});
    HorizonProfile p;
    p.depth = need(m, "measured", "depth").get<std::size_t>();
    p.measured_horizons = need(m, "measured", "horizons").get<std::vector<std::size_t>>();
    const auto cosv = need(m, "measured", "cos").get<std::vector<double>>();
    const auto memv = need(m, "measured", "mem").get<std::vector<double>>();
    if (cosv.size() != p.measured_horizons.size() || memv.size() != p.measured_horizons.size())
      config_error("measured horizons/cos/mem lengths differ");
    for (std::size_t i = 0; i < p.measured_horizons.size(); ++i) {
      p.measured_cos[p.measured_horizons[i]] = cosv[i];
      p.measured_mem[p.measured_horizons[i]] = memv[i];
    }
    fit_profile(p);
    return p;
  }
  const Dataset data = dataset_from_config(need(cfg, "config", "dataset"));
  const Network net = network_from_config(need(cfg, "config", "network"));
  const MemoryModel model =
      memory_from_config(sel.value("memory", json::object()), net.depth(), "");
  const std::vector<std::size_t> horizons =
      sel.contains("horizons") ? sel.at("horizons").get<std::vector<std::size_t>>()
                               : default_horizon_subset(net.depth());
  (void)seed;
  return build_profile(net, data, horizons, sel.value("batches", std::size_t{4}),
                       sel.value("batch_size", std::size_t{100}), model);
}

// Independent enumeration used by --brute-force: a direct scan sharing only
// the fitted polynomials with select_horizon.
SelectionResult brute_force_selection(const HorizonProfile& p, const Objective& obj,
                                      const CostFn& fn) {
  SelectionResult res;
  double best = 0.0;
  for (std::size_t h = 1; h <= p.depth; ++h) {
    const double r = estimate_rate(p, h);
    const double mem = std::max(0.0, polyeval(p.mem_fit, static_cast<double>(h)));
    const double cost = cost_value(fn, mem);
    double val;
    bool ok = true;
    if (obj.kind == ObjectiveKind::AccuracyConstraint) {
      ok = r >= 1.0 - obj.epsilon;
      val = cost;
    } else {
      val = -r + obj.lambda * cost;
    }
    if (ok && (!res.feasible || val < best)) {
      res.feasible = true;
      best = val;
      res.h_star = h;
    }
  }
  return res;
}

void cmd_select_horizon(Run& run, const json& cfg, bool brute) {
  check_keys(cfg, "config", {"schema", "seed", "dataset", "network", "selection"});
  const json& sel = need(cfg, "config", "selection");
  check_keys(sel, "selection",
             {"measured", "horizons", "batches", "batch_size", "objective", "cost", "memory"});
  const HorizonProfile profile = profile_from_config(sel, cfg, run.seed);
  const Objective obj = objective_from_config(need(sel, "selection", "objective"));
  const CostFn fn = cost_from_config(sel.value("cost", json::object()));
  const SelectionResult res =
      brute ? brute_force_selection(profile, obj, fn) : select_horizon(profile, obj, fn);
  if (!brute) run.emit("selection.csv", selection_table_to_csv(res));
  run.emit("selection_report.txt", selection_report(profile, obj, fn, res));
  if (res.feasible)
    std::printf("h_star=%zu\n", res.h_star);
  else
    std::printf("h_star=infeasible\n");
}

void cmd_evaluate(Run& run, const json& cfg) {
  check_keys(cfg, "config",
             {"schema", "seed", "dataset", "network", "evaluate"});
  const json& ev = need(cfg, "config", "evaluate");
  check_keys(ev, "evaluate",
             {"horizons", "stage_ends", "train", "objective", "cost", "memory", "selection"});
  const Dataset data = dataset_from_config(need(cfg, "config", "dataset"));
  const Network init = network_from_config(need(cfg, "config", "network"));
  const std::size_t depth = init.depth();
  const Objective obj = objective_from_config(need(ev, "evaluate", "objective"));
  const CostFn fn = cost_from_config(ev.value("cost", json::object()));
  const MemoryModel model =
      memory_from_config(ev.value("memory", json::object()), depth, "");
  TrainConfig base = train_from_config(ev.value("train", json::object()), run.seed);
  base.algorithm = TrainAlgorithm::Mpc;

  std::set<std::size_t> horizons;
  if (ev.contains("horizons"))
    for (std::size_t h : ev.at("horizons").get<std::vector<std::size_t>>())
      horizons.insert(h);
  horizons.insert(depth);  // full-horizon reference is always evaluated

  auto train_mpc = [&](std::size_t h) {
    TrainConfig tc = base;
    tc.horizon = h;
    return train_sgd(init, data, tc);
  };
  const TrainResult ref = train_mpc(depth);
  const std::size_t tau = base.epochs;

  // Objective value of a run given its rate r and memory footprint.
  auto score = [&](double r, double mem) -> std::optional<double> {
    const double cost = cost_value(fn, mem);
    if (obj.kind == ObjectiveKind::AccuracyConstraint) {
      if (r < 1.0 - obj.epsilon) return std::nullopt;
      return cost;
    }
    return -r + obj.lambda * cost;
  };

  std::map<std::string, std::optional<double>> values;
  std::map<std::string, std::string> detail;
  for (std::size_t h : horizons) {
    const TrainResult res = (h == depth) ? ref : train_mpc(h);
    const double r = loss_rate(res.record, ref.record, tau);
    char name[32];
    std::snprintf(name, sizeof(name), "mpc-%zu", h);
    values[name] = score(r, memory_estimate(model, h));
    detail[name] = "r=" + format_real(r);
  }
  if (ev.contains("stage_ends")) {
    TrainConfig tc = base;
    tc.algorithm = TrainAlgorithm::Loco;
    tc.stage_ends = ev.at("stage_ends").get<std::vector<std::size_t>>();
    const TrainResult res = train_sgd(init, data, tc);
    const double r = loss_rate(res.record, ref.record, tau);
    // Memory-equivalent horizon: the longest two-stage window any stage
    // back-propagates through.
    BlockGrouping grouping{tc.stage_ends};
    grouping.validate(depth);
    std::size_t span = 0;
    for (std::size_t s = 0; s < grouping.stage_count(); ++s) {
      const std::size_t e2 = grouping.stage_ends[std::min(s + 1, grouping.stage_count() - 1)];
      span = std::max(span, e2 - grouping.stage_begin(s));
    }
    values["loco"] = score(r, memory_estimate(model, span));
    detail["loco"] = "r=" + format_real(r);
  }
  if (ev.contains("selection")) {
    const json& sel = ev.at("selection");
    check_keys(sel, "selection", {"measured", "horizons", "batches", "batch_size", "memory"});
    json sel2 = sel;
    const HorizonProfile profile = profile_from_config(sel2, cfg, run.seed);
    const SelectionResult chosen = select_horizon(profile, obj, fn);
    if (!chosen.feasible) {
      values["selected"] = std::nullopt;
      detail["selected"] = "infeasible";
    } else {
      const TrainResult res = train_mpc(chosen.h_star);
      const double r = loss_rate(res.record, ref.record, tau);
      values["selected"] = score(r, memory_estimate(model, chosen.h_star));
      detail["selected"] = "h_star=" + std::to_string(chosen.h_star) + " r=" + format_real(r);
    }
  }

  const std::map<std::string, double> rel = relative_performance(values);
  std::string csv = "algorithm,objective_value,rel\n";
  for (const auto& [name, value] : values) {
    csv += name + ",";
    if (value) csv += format_real(*value);
    csv += "," + format_real(rel.at(name)) + "\n";
  }
  run.emit("evaluate.csv", csv);
  std::string txt;
  for (const auto& [name, d] : detail) txt += name + ": " + d + "\n";
  run.emit("evaluate_details.txt", txt);
}

void cmd_verify_theory(Run& run, const json& cfg) {
  check_keys(cfg, "config", {"schema", "seed", "theory"});
  const json& th = cfg.value("theory", json::object());
  check_keys(th, "theory",
             {"n", "depth", "c", "seeds", "alphas", "lemma_chains", "lemma_depth",
              "lemma_samples"});
  const std::size_t n = th.value("n", std::size_t{8});
  const std::size_t depth = th.value("depth", std::size_t{100});
  const double c = th.value("c", 1.0);
  std::vector<std::uint64_t> seeds =
      th.contains("seeds") ? th.at("seeds").get<std::vector<std::uint64_t>>()
                           : std::vector<std::uint64_t>{1, 2, 3, 4, 5};
  std::vector<double> alphas;
  if (th.contains("alphas"))
    alphas = th.at("alphas").get<std::vector<double>>();
  else
    for (double a = 0.70; a < 0.96; a += 0.05) alphas.push_back(a);

  const ScalingReport rep = scaling_experiment(n, depth, c, seeds, alphas);
  run.emit("scaling.csv", scaling_report_to_csv(rep));
  const bool slope_ok = rep.slope >= 2.0 && rep.slope <= 4.0;

  const std::size_t chains = th.value("lemma_chains", std::size_t{20});
  const std::size_t lemma_depth = th.value("lemma_depth", std::size_t{64});
  const std::size_t lemma_samples = th.value("lemma_samples", std::size_t{100});
  SeededRng rng(run.seed);
  std::size_t checked = 0, violations = 0;
  std::string failures;
  for (std::size_t i = 0; i < chains; ++i) {
    SeededRng chain_rng = rng.child(i);
    const LinearChain chain = make_theorem_chain(n, lemma_depth, c, chain_rng);
    SeededRng sample_rng = rng.child(1000 + i);
    const LemmaBoundsReport lem = lemma_bounds_check(chain, lemma_samples, sample_rng);
    checked += lem.checked;
    violations += lem.violations;
    for (const std::string& f : lem.failures) failures += f + "\n";
  }
  std::string report;
  report += "slope=" + format_real(rep.slope) + "\n";
  report += std::string("slope_window=[2,4] ") + (slope_ok ? "pass" : "fail") + "\n";
  report += "lemma_checked=" + std::to_string(checked) + "\n";
  report += "lemma_violations=" + std::to_string(violations) + "\n";
  if (!failures.empty()) report += failures;
  run.emit("verify_report.txt", report);
  std::printf("slope=%s window=[2,4] %s lemma_violations=%zu\n",
              format_real(rep.slope).c_str(), slope_ok ? "pass" : "fail", violations);
  if (!slope_ok || violations != 0) throw std::runtime_error("theory verification failed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Horizon-gradient training experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir, mode;
  std::optional<std::uint64_t> seed_flag;
  bool brute_force = false;

  auto add_common = [&](CLI::App* sub, bool needs_out = true) {
    sub->add_option("--config", config_path, "JSON experiment config")->required();
    if (needs_out) sub->add_option("--out", out_dir, "Artifact directory")->required();
    sub->add_option("--seed", seed_flag, "Override the config seed");
    return sub;
  };

  add_common(app.add_subcommand("gen-data", "Generate a dataset file"));
  add_common(app.add_subcommand("train", "Train one configuration"));
  add_common(app.add_subcommand("sweep-gradients", "Gradient angle sweep over horizons"));
  CLI::App* pm = add_common(app.add_subcommand("profile-memory", "Memory accountant table"));
  pm->add_option("--mode", mode, "Memory mode")->check(CLI::IsMember({"eager", "static"}));
  CLI::App* sh = add_common(app.add_subcommand("select-horizon", "Horizon selection"));
  sh->add_flag("--brute-force", brute_force, "Independent enumeration oracle");
  add_common(app.add_subcommand("evaluate", "Relative-performance table"));
  add_common(app.add_subcommand("verify-theory", "Scaling slope and lemma bound checks"));

  CLI11_PARSE(app, argc, argv);

  try {
    const std::string cfg_text = read_file(config_path);
    json cfg = json::parse(cfg_text);
    if (!cfg.is_object() || !cfg.contains("schema") || cfg.at("schema") != kConfigSchema)
      config_error(std::string("schema must be '") + kConfigSchema + "'");

    Run run;
    run.command = app.get_subcommands().front()->get_name();
    run.out_dir = out_dir;
    std::filesystem::create_directories(run.out_dir);
    run.seed = seed_flag ? *seed_flag : cfg.value("seed", std::uint64_t{0});
    cfg["seed"] = run.seed;  // echo the effective seed
    run.config_echo = cfg;

    if (run.command == "gen-data")
      cmd_gen_data(run, cfg);
    else if (run.command == "train")
      cmd_train(run, cfg);
    else if (run.command == "sweep-gradients")
      cmd_sweep_gradients(run, cfg);
    else if (run.command == "profile-memory")
      cmd_profile_memory(run, cfg, mode);
    else if (run.command == "select-horizon")
      cmd_select_horizon(run, cfg, brute_force);
    else if (run.command == "evaluate")
      cmd_evaluate(run, cfg);
    else if (run.command == "verify-theory")
      cmd_verify_theory(run, cfg);

    run.write_manifest();
  } catch (const std::exception& e) {
    json err;
    err["error"] = e.what();
    std::fprintf(stderr, "%s\n", err.dump().c_str());
    return 1;
  }
  return 0;
}

// Copyright 2026 The dcc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dcc/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "dcc/baselines.hpp"
#include "dcc/calibration.hpp"
#include "dcc/copula.hpp"
#include "dcc/error.hpp"
#include "dcc/metrics.hpp"
#include "dcc/rng.hpp"

namespace dcc {

using nlohmann::json;

std::string to_string(ExperimentKind kind) { return kind == ExperimentKind::synthetic ? "synthetic" : "pima"; }

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig c;
  c.experiment = kind;
  if (kind == ExperimentKind::pima) {
    c.modes = {MarginalMode::per_class};
    c.dcc.smoothness = 12.0;
    c.dcc.normalizer = NormalizerKind::sobol;
    c.dcc.sobol_points = 65536;
    c.dcc.lr = 8e-4;
    c.dcc.epochs = 700;
    c.dcc.batch_size = 128;
  }
  return c;
}

namespace {

[[noreturn]] void reject(const std::string& key, const std::string& why) {
  throw InputError("config key \"" + key + "\": " + why);
}

template <class T>
T read_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    reject(key, "wrong type");
  }
}

double read_real(const json& j, const std::string& key) {
  if (!j.is_number()) reject(key, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) reject(key, "must be finite");
  return v;
}

long long read_int(const json& j, const std::string& key) {
  if (!j.is_number_integer()) reject(key, "expected an integer");
  return j.get<long long>();
}

void require(bool ok, const std::string& key, const std::string& why) {
  if (!ok) reject(key, why);
}

}  // namespace

ExperimentConfig validate_config(std::string_view raw) {
  json doc;
  const bool blank = raw.find_first_not_of(" \t\r\n") == std::string_view::npos;
  if (!blank) {
    try {
      doc = json::parse(raw);
    } catch (const json::parse_error& e) {
      throw InputError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw InputError("config must be a JSON object");
  } else {
    doc = json::object();
  }

  ExperimentKind kind = ExperimentKind::synthetic;
  if (doc.contains("experiment")) {
    const auto& v = doc.at("experiment");
    if (!v.is_string()) reject("experiment", "expected a string");
    const auto s = v.get<std::string>();
    if (s == "synthetic")
      kind = ExperimentKind::synthetic;
    else if (s == "pima")
      kind = ExperimentKind::pima;
    else
      reject("experiment", "must be \"synthetic\" or \"pima\"");
  }
  ExperimentConfig c = default_config(kind);

  for (const auto& [key, v] : doc.items()) {
    if (key == "experiment") {
      continue;
    } else if (key == "seed") {
      const auto s = read_int(v, key);
      require(s >= 0, key, "must be >= 0");
      c.seed = static_cast<std::uint64_t>(s);
    } else if (key == "n_seeds") {
      const auto s = read_int(v, key);
      require(s >= 1 && s <= 1000, key, "must be in [1, 1000]");
      c.n_seeds = static_cast<int>(s);
    } else if (key == "modes") {
      if (!v.is_array() || v.empty()) reject(key, "expected a non-empty array of mode names");
      c.modes.clear();
      for (const auto& m : v) {
        if (!m.is_string()) reject(key, "expected mode names");
        try {
          c.modes.push_back(parse_marginal_mode(m.get<std::string>()));
        } catch (const InputError& e) {
          reject(key, e.what());
        }
      }
    } else if (key == "rho") {
      c.rho = read_real(v, key);
      require(std::abs(c.rho) < 1.0, key, "must lie strictly inside (-1, 1)");
    } else if (key == "n_per_class") {
      const auto n = read_int(v, key);
      require(n >= 3 && n <= 10'000'000, key, "must be in [3, 1e7]");
      c.n_per_class = static_cast<int>(n);
    } else if (key == "input_csv") {
      c.input_csv = read_as<std::string>(v, key);
    } else if (key == "output_dir") {
      c.output_dir = read_as<std::string>(v, key);
    } else if (key == "winsor_q") {
      c.winsor_q = read_real(v, key);
      require(c.winsor_q >= 0.0 && c.winsor_q < 0.5, key, "must be in [0, 0.5)");
    } else if (key == "bandwidth_scale") {
      c.dcc.bandwidth.scale = read_real(v, key);
      require(c.dcc.bandwidth.scale > 0.0, key, "must be > 0");
    } else if (key == "bandwidth_exponent") {
      c.dcc.bandwidth.exponent = read_real(v, key);
    } else if (key == "bandwidth_relative") {
      c.dcc.bandwidth.relative_to_sd = read_as<bool>(v, key);
    } else if (key == "smoothness") {
      c.dcc.smoothness = read_real(v, key);
      require(c.dcc.smoothness > 0.0, key, "must be > 0");
    } else if (key == "width_const") {
      c.dcc.width_const = read_real(v, key);
      require(c.dcc.width_const > 0.0, key, "must be > 0");
    } else if (key == "build_sn_iters") {
      const auto n = read_int(v, key);
      require(n >= 1 && n <= 10000, key, "must be in [1, 10000]");
      c.dcc.build_sn_iters = static_cast<int>(n);
    } else if (key == "normalizer") {
      if (!v.is_string()) reject(key, "expected \"grid\" or \"sobol\"");
      try {
        c.dcc.normalizer = parse_normalizer_kind(v.get<std::string>());
      } catch (const InputError& e) {
        reject(key, e.what());
      }
    } else if (key == "grid_resolution") {
      const auto n = read_int(v, key);
      require(n >= 2 && n <= 4096, key, "must be in [2, 4096]");
      c.dcc.grid_resolution = static_cast<int>(n);
    } else if (key == "sobol_points") {
      const auto n = read_int(v, key);
      require(n >= 16 && n <= (1LL << 22), key, "must be in [16, 2^22]");
      c.dcc.sobol_points = static_cast<Eigen::Index>(n);
    } else if (key == "normalizer_slice") {
      const auto n = read_int(v, key);
      require(n >= 0, key, "must be >= 0 (0 uses the full point set)");
      c.dcc.normalizer_slice = static_cast<Eigen::Index>(n);
    } else if (key == "penalty_weight") {
      c.dcc.penalty_weight = read_real(v, key);
      require(c.dcc.penalty_weight >= 0.0, key, "must be >= 0");
    } else if (key == "penalty_bins") {
      const auto n = read_int(v, key);
      require(n >= 1 && n <= 4096, key, "must be in [1, 4096]");
      c.dcc.penalty_bins = static_cast<int>(n);
    } else if (key == "lr") {
      c.dcc.lr = read_real(v, key);
      require(c.dcc.lr > 0.0, key, "must be > 0");
    } else if (key == "epochs") {
      const auto n = read_int(v, key);
      require(n >= 1 && n <= 1'000'000, key, "must be in [1, 1e6]");
      c.dcc.epochs = static_cast<int>(n);
    } else if (key == "batch_size") {
      const auto n = read_int(v, key);
      require(n >= 1 && n <= 1'000'000, key, "must be in [1, 1e6]");
      c.dcc.batch_size = static_cast<int>(n);
    } else if (key == "tau") {
      c.dcc.tau = read_real(v, key);
      require(c.dcc.tau >= 0.0, key, "must be >= 0");
    } else if (key == "gnb_var_floor") {
      c.gnb_var_floor = read_real(v, key);
      require(c.gnb_var_floor > 0.0, key, "must be > 0");
    } else if (key == "decision_grid") {
      const auto n = read_int(v, key);
      require(n >= 2 && n <= 2001, key, "must be in [2, 2001]");
      c.decision_grid = static_cast<int>(n);
    } else if (key == "decision_extent") {
      c.decision_extent = read_real(v, key);
      require(c.decision_extent > 0.0, key, "must be > 0");
    } else if (key == "probe_resolution") {
      const auto n = read_int(v, key);
      require(n >= 2 && n <= 2048, key, "must be in [2, 2048]");
      c.probe_resolution = static_cast<int>(n);
    } else {
      reject(key, "unknown key");
    }
  }

  const int dim = kind == ExperimentKind::synthetic ? 2 : static_cast<int>(pima_columns().size()) - 1;
  try {
    if (c.dcc.normalizer == NormalizerKind::grid)
      make_grid_normalizer(dim, c.dcc.grid_resolution, c.dcc.normalizer_slice);
    else
      make_sobol_normalizer(std::min(dim, 1), c.dcc.sobol_points, c.dcc.normalizer_slice);
  } catch (const InputError& e) {
    reject("normalizer_slice", e.what());
  }
  if (c.dcc.normalizer == NormalizerKind::sobol && dim > 8) reject("normalizer", "Sobol table covers dim <= 8");
  return c;
}

json to_json(const ExperimentConfig& c) {
  json modes = json::array();
  for (auto m : c.modes) modes.push_back(to_string(m));
  json j = json::object();
  j["experiment"] = to_string(c.experiment);
  j["seed"] = c.seed;
  j["n_seeds"] = c.n_seeds;
  j["modes"] = modes;
  j["rho"] = c.rho;
  j["n_per_class"] = c.n_per_class;
  j["input_csv"] = c.input_csv.generic_string();
  j["winsor_q"] = c.winsor_q;
  j["bandwidth_scale"] = c.dcc.bandwidth.scale;
  j["bandwidth_exponent"] = c.dcc.bandwidth.exponent;
  j["bandwidth_relative"] = c.dcc.bandwidth.relative_to_sd;
  j["smoothness"] = c.dcc.smoothness;
  j["width_const"] = c.dcc.width_const;
  j["build_sn_iters"] = c.dcc.build_sn_iters;
  j["normalizer"] = to_string(c.dcc.normalizer);
  j["grid_resolution"] = c.dcc.grid_resolution;
  j["sobol_points"] = c.dcc.sobol_points;
  j["normalizer_slice"] = c.dcc.normalizer_slice;
  j["penalty_weight"] = c.dcc.penalty_weight;
  j["penalty_bins"] = c.dcc.penalty_bins;
  j["lr"] = c.dcc.lr;
  j["epochs"] = c.dcc.epochs;
  j["batch_size"] = c.dcc.batch_size;
  j["tau"] = c.dcc.tau;
  j["gnb_var_floor"] = c.gnb_var_floor;
  j["decision_grid"] = c.decision_grid;
  j["decision_extent"] = c.decision_extent;
  j["probe_resolution"] = c.probe_resolution;
  return j;
}

std::string config_hash(const ExperimentConfig& config) {
  // FNV-1a, 64 bit, over the compact canonical dump.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json(config).dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

namespace {

struct ScoredModel {
  std::string name;
  PlattModel platt;
  std::vector<double> raw;  // test scores
};

std::vector<int> to_vector(const Labels& labels) { return {labels.begin(), labels.end()}; }

void warn_if_flipped(const std::string& name, const PlattModel& p, RunReport& report) {
  if (!p.ranking_flipped()) return;
  const std::string msg = name + ": Platt slope is negative, calibration reverses the score ranking";
  std::cerr << "warning: " << msg << '\n';
  report.warnings.push_back(msg);
}

void write_predictions(const std::filesystem::path& path, const std::vector<int>& index, const Labels& labels,
                       const std::vector<double>& raw, const std::vector<double>& prob) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out.precision(17);
  out << "index,true_label,score_raw,score_calibrated,pred_label\n";
  for (std::size_t i = 0; i < raw.size(); ++i)
    out << index[i] << ',' << labels[i] << ',' << raw[i] << ',' << prob[i] << ',' << (prob[i] > 0.5 ? 1 : 0) << '\n';
}

// Evaluates one calibrated model on the opened test rows and writes its files.
ModelRow evaluate_model(const ScoredModel& m, const Dataset& test, const std::vector<int>& test_index,
                        const std::filesystem::path& out, bool curves) {
  const auto labels = to_vector(test.labels());
  const auto prob = apply_platt(m.platt, m.raw);
  const EvalReport r = evaluate_probabilities(prob, labels);
  write_predictions(out / ("predictions_" + m.name + ".csv"), test_index, test.labels(), m.raw, prob);
  if (curves) {
    write_roc_csv(out / ("roc_" + m.name + ".csv"), r.roc);
    write_pr_csv(out / ("pr_" + m.name + ".csv"), r.pr);
    write_reliability_csv(out / ("reliability_" + m.name + ".csv"), r.reliability);
  }
  return ModelRow{m.name, r.accuracy, r.roc_auc, r.pr_auc, r.ece, m.platt.slope, m.platt.intercept};
}

std::vector<double> dcc_scores(const DccModel& model, const Eigen::MatrixXd& x) {
  const Eigen::MatrixXd lj = log_joint_rows(model, x);
  std::vector<double> s(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) s[static_cast<std::size_t>(i)] = lj(i, 1) - lj(i, 0);
  return s;
}

PlattModel calibrate(const std::vector<double>& cal_scores, const Dataset& cal, const std::string& stage) {
  try {
    return fit_platt(cal_scores, to_vector(cal.labels()));
  } catch (const std::exception& e) {
    throw NumericalError(stage + ": calibration failed: " + e.what());
  }
}

void record_training(const DccFit& fit, const std::string& name, const std::filesystem::path& out,
                     RunReport& report) {
  for (std::size_t y = 0; y < fit.training.size(); ++y) {
    const auto& trace = fit.training[y].trace;
    write_trace_csv(out / ("loss_trace_" + name + "_class" + std::to_string(y) + ".csv"), trace);
    if (!trace.empty()) {
      report.first_penalty.push_back(trace.front().penalty);
      report.last_penalty.push_back(trace.back().penalty);
    }
  }
}

json metrics_json(const ExperimentConfig& config, const RunReport& report) {
  json models = json::array();
  for (const auto& m : report.models)
    models.push_back({{"name", m.name},
                      {"accuracy", m.accuracy},
                      {"roc_auc", m.roc_auc},
                      {"pr_auc", m.pr_auc},
                      {"ece", m.ece},
                      {"platt", {{"a", m.platt_a}, {"b", m.platt_b}}}});
  json j = json::object();
  j["experiment"] = to_string(config.experiment);
  j["seed"] = report.seed;
  j["config_hash"] = config_hash(config);
  j["models"] = std::move(models);
  if (report.bayes_ceiling_accuracy >= 0) j["bayes_ceiling_accuracy"] = report.bayes_ceiling_accuracy;
  j["warnings"] = report.warnings;
  return j;
}

template <class Fn>
auto stage(const std::string& name, Fn&& fn) {
  try {
    return fn();
  } catch (const InputError& e) {
    throw InputError(name + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(name + ": " + e.what());
  }
}

void write_decision_region(const std::filesystem::path& path, const DccModel& model, const PlattModel& platt,
                           int n, double extent) {
  Eigen::MatrixXd grid(static_cast<Eigen::Index>(n) * n, 2);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      grid(static_cast<Eigen::Index>(i) * n + j, 0) = -extent + 2.0 * extent * i / (n - 1);
      grid(static_cast<Eigen::Index>(i) * n + j, 1) = -extent + 2.0 * extent * j / (n - 1);
    }
  const auto prob = apply_platt(platt, dcc_scores(model, grid));
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out.precision(17);
  out << "x1,x2,pred,posterior\n";
  for (Eigen::Index r = 0; r < grid.rows(); ++r) {
    const double p = prob[static_cast<std::size_t>(r)];
    out << grid(r, 0) << ',' << grid(r, 1) << ',' << (p > 0.5 ? 1 : 0) << ',' << p << '\n';
  }
}

}  // namespace

RunReport run_synthetic(const ExperimentConfig& config, std::uint64_t seed, const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  RunReport report;
  report.seed = seed;

  const Dataset ds =
      stage("data", [&] { return gen_synthetic(config.n_per_class, config.rho, derive_seed(seed, 1)); });
  const SplitPlan plan = stage("split", [&] { return make_splits(ds.labels(), derive_seed(seed, 2)); });
  write_split_csv(out / "splits.csv", plan);
  const Dataset fit_rows = ds.subset(plan.fit_idx);
  const Dataset cal_rows = ds.subset(plan.cal_idx);
  SealedSplit test(ds.subset(plan.test_idx));

  struct Fitted {
    std::string name;
    DccModel model;
    PlattModel platt;
  };
  std::vector<Fitted> fitted;
  for (MarginalMode mode : config.modes) {
    const std::string name = "dcc_" + to_string(mode);
    DccConfig dc = config.dcc;
    dc.mode = mode;
    dc.seed = derive_seed(seed, 3);
    DccFit fit = stage("fit " + name, [&] { return fit_dcc(fit_rows, dc); });
    record_training(fit, to_string(mode), out, report);
    for (std::size_t y = 0; y < fit.model.copulas.size(); ++y)
      write_copula_probe_csv(out / ("copula_probe_" + to_string(mode) + "_class" + std::to_string(y) + ".csv"),
                             fit.model.copulas[y], config.probe_resolution);
    PlattModel platt = calibrate(dcc_scores(fit.model, cal_rows.features()), cal_rows, "calibrate " + name);
    warn_if_flipped(name, platt, report);
    write_decision_region(out / ("decision_region_" + to_string(mode) + ".csv"), fit.model, platt,
                          config.decision_grid, config.decision_extent);
    fitted.push_back({name, std::move(fit.model), platt});
  }

  const Dataset& test_rows = test.open();
  for (const auto& f : fitted) {
    ScoredModel m{f.name, f.platt, dcc_scores(f.model, test_rows.features())};
    report.models.push_back(evaluate_model(m, test_rows, plan.test_idx, out, true));
  }
  std::vector<int> bayes;
  for (Eigen::Index i = 0; i < test_rows.rows(); ++i)
    bayes.push_back(bayes_rule_synthetic(config.rho, test_rows.features().row(i).transpose()));
  report.bayes_ceiling_accuracy = accuracy(bayes, to_vector(test_rows.labels()));

  report.test_reads = test.reads();
  report.metrics = metrics_json(config, report);
  write_json(out / "metrics.json", report.metrics);
  return report;
}

RunReport run_pima(const ExperimentConfig& config, std::uint64_t seed, const std::filesystem::path& out) {
  RunReport report;
  report.seed = seed;

  const Dataset raw = stage("load", [&] { return load_pima(config.input_csv); });
  std::filesystem::create_directories(out);
  const PartialDataset partial = mark_zeros_missing(raw);
  const SplitPlan plan = stage("split", [&] { return make_splits(raw.labels(), derive_seed(seed, 2)); });
  write_split_csv(out / "splits.csv", plan);
  const PreprocessStats stats = stage("preprocess", [&] { return fit_preprocess(partial, plan, config.winsor_q); });
  const Dataset fit_rows = apply_preprocess(partial.subset(plan.fit_idx), stats);
  const Dataset cal_rows = apply_preprocess(partial.subset(plan.cal_idx), stats);
  SealedSplit test(apply_preprocess(partial.subset(plan.test_idx), stats));

  std::vector<ScoredModel> models;
  std::vector<DccModel> dcc_models;
  for (MarginalMode mode : config.modes) {
    const std::string name = config.modes.size() == 1 ? "dcc" : "dcc_" + to_string(mode);
    DccConfig dc = config.dcc;
    dc.mode = mode;
    dc.seed = derive_seed(seed, 3);
    DccFit fit = stage("fit " + name, [&] { return fit_dcc(fit_rows, dc); });
    record_training(fit, to_string(mode), out, report);
    const PlattModel platt = calibrate(dcc_scores(fit.model, cal_rows.features()), cal_rows, "calibrate " + name);
    warn_if_flipped(name, platt, report);
    models.push_back({name, platt, {}});
    dcc_models.push_back(std::move(fit.model));
  }

  const LogisticModel lr = stage("fit logreg", [&] { return fit_logreg(fit_rows); });
  if (!lr.converged) report.warnings.push_back("logreg: gradient tolerance not reached");
  const PlattModel lr_platt = calibrate(score_rows(lr, cal_rows.features()), cal_rows, "calibrate logreg");
  warn_if_flipped("logreg", lr_platt, report);
  const GnbModel gnb = stage("fit gnb", [&] { return fit_gnb(fit_rows, config.gnb_var_floor); });
  const PlattModel gnb_platt = calibrate(score_rows(gnb, cal_rows.features()), cal_rows, "calibrate gnb");
  warn_if_flipped("gnb", gnb_platt, report);

  const Dataset& test_rows = test.open();
  for (std::size_t k = 0; k < dcc_models.size(); ++k) models[k].raw = dcc_scores(dcc_models[k], test_rows.features());
  models.push_back({"logreg", lr_platt, score_rows(lr, test_rows.features())});
  models.push_back({"gnb", gnb_platt, score_rows(gnb, test_rows.features())});
  for (const auto& m : models) report.models.push_back(evaluate_model(m, test_rows, plan.test_idx, out, true));

  report.test_reads = test.reads();
  report.metrics = metrics_json(config, report);
  write_json(out / "metrics.json", report.metrics);
  return report;
}

namespace {

json summarize(const ExperimentConfig& config, const std::vector<RunReport>& runs) {
  std::vector<std::uint64_t> seeds;
  for (const auto& r : runs) seeds.push_back(r.seed);
  json models = json::array();
  for (std::size_t k = 0; k < runs.front().models.size(); ++k) {
    json mean = json::object(), sd = json::object();
    const auto field = [&](const char* key, auto get) {
      double s = 0.0;
      for (const auto& r : runs) s += get(r.models[k]);
      const double m = s / static_cast<double>(runs.size());
      double ss = 0.0;
      for (const auto& r : runs) ss += (get(r.models[k]) - m) * (get(r.models[k]) - m);
      mean[key] = m;
      sd[key] = runs.size() > 1 ? std::sqrt(ss / static_cast<double>(runs.size() - 1)) : 0.0;
    };
    field("accuracy", [](const ModelRow& m) { return m.accuracy; });
    field("roc_auc", [](const ModelRow& m) { return m.roc_auc; });
    field("pr_auc", [](const ModelRow& m) { return m.pr_auc; });
    field("ece", [](const ModelRow& m) { return m.ece; });
    models.push_back({{"name", runs.front().models[k].name}, {"mean", mean}, {"std", sd}});
  }
  json j = json::object();
  j["experiment"] = to_string(config.experiment);
  j["seeds"] = seeds;
  j["config_hash"] = config_hash(config);
  j["models"] = std::move(models);
  return j;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  ExperimentResult result;
  for (int k = 0; k < config.n_seeds; ++k) {
    const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(k);
    const auto dir = config.n_seeds == 1 ? config.output_dir : config.output_dir / ("seed_" + std::to_string(seed));
    result.runs.push_back(config.experiment == ExperimentKind::synthetic ? run_synthetic(config, seed, dir)
                                                                         : run_pima(config, seed, dir));
  }
  result.summary = summarize(config, result.runs);
  if (config.n_seeds > 1) write_json(config.output_dir / "summary.json", result.summary);
  return result;
}

}  // namespace dcc

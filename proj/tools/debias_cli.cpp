// Command-line pipeline: generate biased datasets, estimate biasing
// functions and solve for debiasing weights, run naive-vs-debiased training
// comparisons, and reproduce the two-point Gini study. Every command is
// deterministic given its seed; outputs are CSV/JSON with stable formats.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "debias/error.hpp"
#include "debias/estimators.hpp"
#include "debias/generators.hpp"
#include "debias/harness.hpp"
#include "debias/io.hpp"
#include "debias/oracle.hpp"
#include "debias/solver.hpp"
#include "debias/weights.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 1;
  std::string format = "csv";
};

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

json require(const json& j, const std::string& key) {
  if (!j.contains(key)) debias::throw_config("config: missing key '" + key + "'");
  return j.at(key);
}

std::uint64_t effective_seed(const CommonOpts& opts, const json& config) {
  if (opts.seed_set) return opts.seed;
  return config.value("seed", std::uint64_t{0});
}

// Output paths are recorded relative to the output directory, so two runs of
// the same config into different directories produce identical manifests
// (apart from wall time).
void write_manifest(const CommonOpts& opts, const std::string& command,
                    json config, std::uint64_t seed,
                    std::vector<std::string> inputs,
                    std::vector<std::string> outputs, double wall_s,
                    json extra = json::object()) {
  debias::io::RunManifest manifest;
  manifest.command = command;
  config["seed"] = seed;
  manifest.config = std::move(config);
  manifest.seed = seed;
  manifest.inputs = std::move(inputs);
  for (auto& out : outputs) {
    out = fs::path(out).filename().string();
  }
  manifest.outputs = std::move(outputs);
  manifest.wall_time_s = wall_s;
  json j = manifest.to_json();
  for (auto& [k, v] : extra.items()) j[k] = v;
  debias::io::write_json(j, fs::path(opts.out_dir) / "manifest.json");
}

std::vector<std::size_t> sizes_from_config(const json& cfg, int k) {
  if (cfg.contains("sizes")) {
    return cfg.at("sizes").get<std::vector<std::size_t>>();
  }
  if (cfg.contains("alpha")) {
    return debias::long_tail_sizes(require(cfg, "n_total").get<std::size_t>(),
                                   k, cfg.at("alpha").get<double>());
  }
  if (cfg.contains("n_total")) {
    return debias::balanced_sizes(cfg.at("n_total").get<std::size_t>(), k);
  }
  const auto per = require(cfg, "n_per_source").get<std::size_t>();
  return std::vector<std::size_t>(static_cast<std::size_t>(k), per);
}

int cmd_generate(const CommonOpts& opts) {
  Stopwatch watch;
  json config = debias::io::load_config(opts.config_path);
  const std::uint64_t seed = effective_seed(opts, config);
  const std::string scenario = require(config, "scenario").get<std::string>();
  fs::create_directories(opts.out_dir);
  const fs::path dataset_path = fs::path(opts.out_dir) / "dataset.csv";

  json extra = json::object();
  if (scenario == "class_imbalance") {
    debias::ClassImbalanceConfig cfg;
    cfg.num_classes = require(config, "M").get<int>();
    cfg.num_sources = require(config, "K").get<int>();
    cfg.gamma = require(config, "gamma").get<double>();
    cfg.source_sizes = sizes_from_config(config, cfg.num_sources);
    cfg.seed = seed;
    // One placeholder observation per class; the scenario is purely about
    // the label distribution.
    std::map<int, std::vector<debias::Observation>> pool;
    for (int y = 0; y < cfg.num_classes; ++y) {
      debias::Observation obs;
      obs.label = y;
      pool[y].push_back(obs);
    }
    auto gen = debias::gen_class_imbalance(cfg, pool);
    debias::io::write_dataset_csv(gen.data, dataset_path);
    json specs = json::array();
    for (const auto& s : gen.true_specs) {
      specs.push_back(debias::io::bias_spec_to_json(s));
    }
    extra["true_specs"] = specs;
  } else if (scenario == "hsv_bins") {
    debias::HsvBinConfig cfg;
    cfg.gamma_ramp = require(config, "gamma_ramp").get<double>();
    cfg.source_sizes = sizes_from_config(config, 8);
    cfg.seed = seed;
    if (config.contains("population_csv")) {
      const auto pop = debias::io::read_dataset_csv(
          config.at("population_csv").get<std::string>());
      for (const auto& src : pop.sources()) {
        for (const auto& obs : src.observations) {
          cfg.population.push_back(obs);
        }
      }
    } else {
      const auto pop_size = config.value("population_size", std::size_t{2000});
      debias::Rng rng = debias::Rng(seed).child(1000);
      for (std::size_t i = 0; i < pop_size; ++i) {
        debias::Observation obs;
        obs.id = static_cast<std::int64_t>(i);
        obs.embedding = {rng.uniform01(), rng.uniform01(), rng.uniform01()};
        cfg.population.push_back(std::move(obs));
      }
    }
    auto gen = debias::gen_hsv_bins(cfg);
    debias::io::write_dataset_csv(gen.data, dataset_path);
    json specs = json::array();
    for (const auto& s : gen.true_specs) {
      specs.push_back(debias::io::bias_spec_to_json(s));
    }
    extra["true_specs"] = specs;
    extra["medians"] = gen.medians;
  } else if (scenario == "power_law") {
    debias::PowerLawConfig cfg;
    cfg.base_proportions =
        require(config, "proportions").get<std::vector<double>>();
    cfg.gamma = require(config, "gamma").get<double>();
    cfg.seed = seed;
    if (config.contains("sigma")) {
      cfg.sigma = config.at("sigma").get<std::vector<int>>();
    }
    const auto pool_sizes =
        require(config, "pool_sizes").get<std::vector<std::size_t>>();
    std::map<int, std::vector<debias::Observation>> pool;
    std::int64_t id = 0;
    for (std::size_t k = 0; k < pool_sizes.size(); ++k) {
      for (std::size_t i = 0; i < pool_sizes[k]; ++i) {
        debias::Observation obs;
        obs.id = id++;
        obs.stratum = static_cast<int>(k);
        pool[static_cast<int>(k)].push_back(std::move(obs));
      }
    }
    const auto data = debias::gen_power_law(cfg, pool);
    debias::io::write_dataset_csv(data, dataset_path);
  } else if (scenario == "two_point") {
    debias::TwoPointConfig cfg;
    cfg.r1 = require(config, "r1").get<double>();
    cfg.r2 = require(config, "r2").get<double>();
    cfg.n1 = require(config, "n1").get<std::size_t>();
    cfg.n2 = require(config, "n2").get<std::size_t>();
    cfg.seed = seed;
    auto gen = debias::gen_two_point(cfg);
    debias::io::write_dataset_csv(gen.data, dataset_path);
    json specs = json::array();
    for (const auto& s : gen.true_specs) {
      specs.push_back(debias::io::bias_spec_to_json(s));
    }
    extra["true_specs"] = specs;
  } else {
    debias::throw_config("generate: unknown scenario '" + scenario + "'");
  }
  write_manifest(opts, "generate", config, seed, {},
                 {dataset_path.string()}, watch.seconds(), extra);
  std::cout << "wrote " << dataset_path.string() << "\n";
  return 0;
}

debias::SolverConfig solver_from_config(const json& j, const CommonOpts& opts,
                                        std::uint64_t seed) {
  debias::SolverConfig cfg;
  const std::string mode = j.value("mode", "minibatch");
  if (mode == "full") cfg.mode = debias::SolverMode::FullGradient;
  else if (mode == "minibatch") cfg.mode = debias::SolverMode::Minibatch;
  else debias::throw_config("solver: unknown mode '" + mode + "'");
  cfg.max_iters = j.value("max_iters", 4000);
  cfg.batch_size = j.value("batch_size", 100);
  cfg.learning_rate = j.value("learning_rate", 1e-2);
  cfg.momentum = j.value("momentum", 0.9);
  cfg.grad_tol = j.value("grad_tol", 1e-8);
  const std::string init = j.value("init", "zero");
  if (init == "normal") {
    cfg.init = debias::SolverInit::SeededNormal;
    cfg.init_seed = j.value("init_seed", seed);
  }
  cfg.batch_seed = seed;
  cfg.threads = opts.threads;
  return cfg;
}

int cmd_solve(const CommonOpts& opts) {
  Stopwatch watch;
  json config = debias::io::load_config(opts.config_path);
  const std::uint64_t seed = effective_seed(opts, config);
  const std::string dataset_path = require(config, "dataset").get<std::string>();
  const auto data = debias::io::read_dataset_csv(dataset_path);

  const json bias = config.value("bias", json{{"mode", "counts"}});
  const std::string mode = require(bias, "mode").get<std::string>();
  std::vector<debias::BiasSpec> specs;
  if (mode == "counts") {
    specs = debias::estimate_class_counts(data, bias.value("smoothing", 0.0));
  } else if (mode == "boxes") {
    specs = debias::estimate_boxes(data, bias.value("margin", 0.0));
  } else if (mode == "truth" || mode == "file") {
    const std::string path = mode == "truth"
                                 ? require(config, "manifest").get<std::string>()
                                 : require(bias, "path").get<std::string>();
    const json j = debias::io::read_json(path);
    const json& arr = mode == "truth" ? j.at("true_specs") : j;
    for (const auto& js : arr) {
      specs.push_back(debias::io::bias_spec_from_json(js));
    }
  } else {
    debias::throw_config("solve: unknown bias mode '" + mode + "'");
  }
  if (bias.contains("scale_multipliers")) {
    const auto mult = bias.at("scale_multipliers").get<std::vector<double>>();
    if (mult.size() != specs.size()) {
      debias::throw_config("solve: scale_multipliers size must equal K");
    }
    for (std::size_t k = 0; k < specs.size(); ++k) specs[k].scale *= mult[k];
  }

  const auto matrix = debias::build_omega_matrix(specs, data);
  const auto& lambda = data.lambdas();
  const auto cfg =
      solver_from_config(config.value("solver", json::object()), opts, seed);
  const auto result = debias::solve(matrix, lambda, cfg);
  const auto diag = debias::diagnose(matrix, lambda, result.u_hat, opts.threads);

  fs::create_directories(opts.out_dir);
  const fs::path out(opts.out_dir);
  debias::io::write_json(debias::io::diagnostics_to_json(diag),
                         out / "diagnostics.json");
  if (!diag.connected) {
    std::cerr << "error: " << result.warnings.back() << "\n";
    return 4;
  }
  const auto weights = debias::compute_pi(matrix, lambda, result.w_hat);
  debias::io::write_weights_csv(weights, matrix, out / "weights.csv");
  debias::io::write_omega_csv(matrix, out / "omega.csv");
  debias::io::write_trace_csv(result.trace, out / "trace.csv");
  debias::io::write_json(debias::io::solver_result_to_json(result),
                         out / "solver.json");
  write_manifest(opts, "solve", config, seed, {dataset_path},
                 {(out / "weights.csv").string(), (out / "omega.csv").string(),
                  (out / "trace.csv").string(), (out / "solver.json").string(),
                  (out / "diagnostics.json").string()},
                 watch.seconds());
  std::cout << "W_hat:";
  for (double w : result.w_hat) std::cout << ' ' << debias::io::format_double(w);
  std::cout << "\n";
  return 0;
}

int cmd_evaluate(const CommonOpts& opts) {
  Stopwatch watch;
  json config = debias::io::load_config(opts.config_path);
  const std::uint64_t seed = effective_seed(opts, config);
  fs::create_directories(opts.out_dir);
  const fs::path out(opts.out_dir);
  const std::string mode = config.value("mode", "compare_sweep");

  if (mode == "distribution") {
    const std::string dataset_path = require(config, "dataset").get<std::string>();
    const std::string weights_path = require(config, "weights").get<std::string>();
    const auto data = debias::io::read_dataset_csv(dataset_path);
    const auto weights = debias::io::read_weights_csv(weights_path);
    const auto key = config.value("key", "label") == std::string("stratum")
                         ? debias::DistKey::Stratum
                         : debias::DistKey::Label;
    const auto dist = debias::debiased_distribution(weights, data, key);
    const double ref_mass = 1.0 / static_cast<double>(dist.support.size());
    double tv = 0.0;
    std::ofstream csv(out / "dist.csv", std::ios::binary);
    csv << "key,value,mass,reference_mass\n";
    for (std::size_t i = 0; i < dist.support.size(); ++i) {
      csv << config.value("key", "label") << ',' << dist.support[i] << ','
          << debias::io::format_double(dist.mass[i]) << ','
          << debias::io::format_double(ref_mass) << '\n';
      tv += 0.5 * std::abs(dist.mass[i] - ref_mass);
    }
    debias::io::write_json({{"tv_to_uniform", tv},
                            {"distribution", debias::io::distribution_to_json(dist)}},
                           out / "report.json");
    write_manifest(opts, "evaluate", config, seed, {dataset_path, weights_path},
                   {(out / "dist.csv").string(), (out / "report.json").string()},
                   watch.seconds());
    std::cout << "tv_to_uniform " << tv << "\n";
    return 0;
  }

  if (mode != "compare_sweep") {
    debias::throw_config("evaluate: unknown mode '" + mode + "'");
  }
  const json cc = config.value("compare", json::object());
  std::vector<double> gammas = config.value("gammas", std::vector<double>{0.2});
  std::vector<std::uint64_t> seeds =
      config.value("seeds", std::vector<std::uint64_t>{});
  if (seeds.empty()) {
    const int num_seeds = config.value("num_seeds", 1);
    debias::Rng rng(seed);
    for (int i = 0; i < num_seeds; ++i) seeds.push_back(rng.next_u64());
  }

  std::ofstream csv(out / "sweep.csv", std::ios::binary);
  csv << "seed,gamma,naive_acc,debiased_acc,gini,l2_to_uniform\n";
  json rows = json::array();
  for (double gamma : gammas) {
    for (std::uint64_t s : seeds) {
      debias::CompareConfig cfg;
      cfg.num_classes = cc.value("M", 8);
      cfg.num_sources = cc.value("K", 8);
      cfg.gamma = gamma;
      cfg.source_sizes = sizes_from_config(
          cc.contains("sizes") || cc.contains("n_total") || cc.contains("alpha")
              ? cc
              : json{{"n_per_source", 1000}},
          cfg.num_sources);
      cfg.feature_dim = cc.value("feature_dim", 16);
      cfg.feature_noise = cc.value("feature_noise", 0.5);
      cfg.pool_per_class = cc.value("pool_per_class", 2000);
      cfg.test_per_class = cc.value("test_per_class", 500);
      cfg.seed = s;
      const json tc = cc.value("train", json::object());
      cfg.train.epochs = tc.value("epochs", 30);
      cfg.train.batch_size = tc.value("batch_size", 100);
      cfg.train.learning_rate = tc.value("learning_rate", 0.05);
      cfg.train.momentum = tc.value("momentum", 0.9);
      cfg.train.l2_penalty = tc.value("l2_penalty", 1e-4);
      cfg.train.seed = s;
      if (tc.value("weight_use", "loss") == std::string("resample")) {
        cfg.train.weight_use = debias::WeightUse::ResampleWithReplacement;
      }
      const auto report = debias::compare(cfg);
      csv << s << ',' << debias::io::format_double(gamma) << ','
          << debias::io::format_double(report.naive_accuracy) << ','
          << debias::io::format_double(report.debiased_accuracy) << ','
          << debias::io::format_double(report.gini) << ','
          << debias::io::format_double(report.l2_to_uniform) << '\n';
      rows.push_back({{"seed", s},
                      {"gamma", gamma},
                      {"naive_acc", report.naive_accuracy},
                      {"debiased_acc", report.debiased_accuracy},
                      {"gini", report.gini},
                      {"l2_to_uniform", report.l2_to_uniform},
                      {"connected", report.connected}});
    }
  }
  debias::io::write_json({{"rows", rows}}, out / "report.json");
  write_manifest(opts, "evaluate", config, seed, {},
                 {(out / "sweep.csv").string(), (out / "report.json").string()},
                 watch.seconds());
  std::cout << "wrote " << (out / "sweep.csv").string() << "\n";
  return 0;
}

int cmd_study_two_point(const CommonOpts& opts) {
  Stopwatch watch;
  json config = debias::io::load_config(opts.config_path);
  const std::uint64_t seed = effective_seed(opts, config);
  const std::vector<double> grid = config.value(
      "r_grid", std::vector<double>{1e-2, 1e-1, 1.0, 10.0, 100.0});
  const auto n1 = config.value("n1", std::size_t{100});
  const auto n2 = config.value("n2", std::size_t{100});
  const int trials = config.value("trials", 100);
  const auto table = debias::run_two_point_study(grid, n1, n2, trials, seed);

  fs::create_directories(opts.out_dir);
  const fs::path out(opts.out_dir);
  std::vector<std::string> outputs;
  if (opts.format == "json") {
    debias::io::write_json(debias::io::study_to_json(table), out / "study.json");
    outputs.push_back((out / "study.json").string());
  } else {
    debias::io::write_study_csv(table, out / "study.csv");
    outputs.push_back((out / "study.csv").string());
  }
  write_manifest(opts, "study-two-point", config, seed, {}, outputs,
                 watch.seconds());
  std::cout << "wrote " << outputs.front() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"selection-bias correction pipeline"};
  app.require_subcommand(1);

  CommonOpts opts;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "JSON config path")
        ->required();
    sub->add_option("--out", opts.out_dir, "output directory");
    sub->add_option("--seed", opts.seed, "seed override")
        ->each([&](const std::string&) { opts.seed_set = true; });
    sub->add_option("--threads", opts.threads, "worker threads");
    sub->add_option("--format", opts.format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
  };

  auto* gen = app.add_subcommand("generate", "synthesize a biased dataset");
  auto* solve = app.add_subcommand("solve", "estimate biases and weights");
  auto* eval = app.add_subcommand("evaluate", "naive vs debiased comparison");
  auto* study = app.add_subcommand("study-two-point", "two-point Gini study");
  for (auto* sub : {gen, solve, eval, study}) add_common(sub);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_generate(opts);
    if (solve->parsed()) return cmd_solve(opts);
    if (eval->parsed()) return cmd_evaluate(opts);
    if (study->parsed()) return cmd_study_two_point(opts);
  } catch (const debias::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case debias::ErrorKind::Config: return 2;
      case debias::ErrorKind::Data: return 3;
      case debias::ErrorKind::Numerical: return 4;
    }
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

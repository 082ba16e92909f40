#include "debias/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "debias/error.hpp"

namespace debias::io {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);  // binary keeps LF endings
  if (!out) throw_data("cannot open " + path.string() + " for writing");
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

nlohmann::json spec_values_json(const std::map<int, double>& values) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : values) j[std::to_string(k)] = v;
  return j;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_dataset_csv(const DatasetCollection& data,
                       const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "source,id,label,stratum,emb_0,emb_1,emb_2\n";
  for (const auto& src : data.sources()) {
    for (const auto& obs : src.observations) {
      out << src.source_index << ',' << obs.id << ',';
      if (obs.has_label()) out << obs.label;
      out << ',';
      if (obs.has_stratum()) out << obs.stratum;
      for (int c = 0; c < 3; ++c) {
        out << ',';
        if (static_cast<std::size_t>(c) < obs.embedding.size()) {
          out << format_double(obs.embedding[static_cast<std::size_t>(c)]);
        }
      }
      out << '\n';
    }
  }
}

DatasetCollection read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_data("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw_data(path.string() + ": empty file");
  std::map<int, SourceDataset> by_source;
  int max_label = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() < 7) throw_data(path.string() + ": short row '" + line + "'");
    Observation obs;
    const int source = std::stoi(f[0]);
    obs.id = std::stoll(f[1]);
    if (!f[2].empty()) obs.label = std::stoi(f[2]);
    if (!f[3].empty()) obs.stratum = std::stoi(f[3]);
    for (int c = 0; c < 3; ++c) {
      const auto& cell = f[static_cast<std::size_t>(4 + c)];
      if (!cell.empty()) obs.embedding.push_back(std::stod(cell));
    }
    max_label = std::max(max_label, obs.label);
    auto& src = by_source[source];
    src.source_index = source;
    src.observations.push_back(std::move(obs));
  }
  std::vector<SourceDataset> sources;
  sources.reserve(by_source.size());
  for (auto& [idx, src] : by_source) sources.push_back(std::move(src));
  return DatasetCollection(std::move(sources), max_label + 1);
}

void write_omega_csv(const OmegaMatrix& omega,
                     const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "source,obs";
  for (std::size_t l = 0; l < omega.cols(); ++l) out << ",omega_" << l;
  out << '\n';
  for (std::size_t r = 0; r < omega.rows(); ++r) {
    const auto [k, i] = omega.location(r);
    out << k << ',' << i;
    for (std::size_t l = 0; l < omega.cols(); ++l) {
      out << ',' << format_double(omega.at(r, l));
    }
    out << '\n';
  }
}

void write_weights_csv(const WeightVector& weights, const OmegaMatrix& omega,
                       const std::filesystem::path& path) {
  if (weights.size() != omega.rows()) {
    throw_data("write_weights_csv: weight/matrix size mismatch");
  }
  auto out = open_out(path);
  out << "source,obs,pi,unnormalized\n";
  for (std::size_t r = 0; r < weights.size(); ++r) {
    const auto [k, i] = omega.location(r);
    out << k << ',' << i << ',' << format_double(weights.pi[r]) << ','
        << format_double(weights.unnormalized[r]) << '\n';
  }
}

WeightVector read_weights_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_data("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw_data(path.string() + ": empty file");
  WeightVector w;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 4) throw_data(path.string() + ": bad row '" + line + "'");
    w.pi.push_back(std::stod(f[2]));
    w.unnormalized.push_back(std::stod(f[3]));
  }
  return w;
}

void write_trace_csv(const std::vector<TraceEntry>& trace,
                     const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "iter,objective,grad_norm\n";
  for (const auto& t : trace) {
    out << t.iteration << ',' << format_double(t.objective) << ','
        << format_double(t.grad_inf_norm) << '\n';
  }
}

void write_study_csv(const TwoPointStudyTable& table,
                     const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "r1,r2,mean_gini_x100,two_std_x100,mean_abs_diff_true_x100,"
         "two_std_abs_diff_x100\n";
  for (const auto& c : table.cells) {
    out << format_double(c.r1) << ',' << format_double(c.r2) << ','
        << format_double(100.0 * c.mean_gini) << ','
        << format_double(100.0 * c.two_std_gini) << ','
        << format_double(100.0 * c.mean_abs_diff) << ','
        << format_double(100.0 * c.two_std_abs_diff) << '\n';
  }
}

nlohmann::json study_to_json(const TwoPointStudyTable& table) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : table.cells) {
    cells.push_back({{"r1", c.r1},
                     {"r2", c.r2},
                     {"mean_gini", c.mean_gini},
                     {"two_std_gini", c.two_std_gini},
                     {"mean_abs_diff_true", c.mean_abs_diff},
                     {"two_std_abs_diff", c.two_std_abs_diff}});
  }
  return {{"r_grid", table.r_grid}, {"cells", cells}};
}

nlohmann::json bias_spec_to_json(const BiasSpec& spec) {
  nlohmann::json j;
  j["kind"] = bias_kind_name(spec.kind);
  switch (spec.kind) {
    case BiasKind::Tabular:
      j["key"] = spec.tabular_key == TabularKey::Stratum ? "stratum" : "label";
      j["values"] = spec_values_json(spec.tabular_values);
      break;
    case BiasKind::ClassRatio:
      j["p_source"] = spec.p_source;
      j["p_test"] = spec.p_test;
      break;
    case BiasKind::BoxRamp:
      j["box_min"] = spec.box_min;
      j["box_max"] = spec.box_max;
      j["gamma_ramp"] = spec.gamma_ramp;
      break;
    case BiasKind::Box:
      j["box_min"] = spec.box_min;
      j["box_max"] = spec.box_max;
      j["margin"] = spec.box_margin;
      break;
    case BiasKind::SimilarityExp:
      j["reference"] = spec.ref_vec;
      j["target"] = spec.target_vec;
      j["beta"] = spec.beta;
      break;
    case BiasKind::SimilarityRatio:
      j["train_mean"] = spec.train_mean;
      j["proportions"] = spec.proportions;
      j["beta"] = spec.beta;
      break;
    case BiasKind::Table: {
      nlohmann::json values = nlohmann::json::object();
      for (const auto& [id, v] : spec.table_values) values[std::to_string(id)] = v;
      j["values"] = values;
      break;
    }
  }
  j["clamp_max"] = spec.clamp_max;
  j["scale"] = spec.scale;
  if (spec.perturb_magnitude > 0.0) {
    j["perturb_magnitude"] = spec.perturb_magnitude;
    j["perturb_seed"] = spec.perturb_seed;
  }
  return j;
}

BiasSpec bias_spec_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  BiasSpec spec;
  if (kind == "tabular") {
    std::map<int, double> values;
    for (const auto& [k, v] : j.at("values").items()) {
      values[std::stoi(k)] = v.get<double>();
    }
    spec = BiasSpec::tabular(
        j.value("key", std::string("stratum")) == "label" ? TabularKey::Label
                                                          : TabularKey::Stratum,
        std::move(values));
  } else if (kind == "class_ratio") {
    spec = BiasSpec::class_ratio(j.at("p_source").get<std::vector<double>>(),
                                 j.at("p_test").get<std::vector<double>>());
  } else if (kind == "box_ramp") {
    spec = BiasSpec::box_ramp(j.at("box_min").get<std::vector<double>>(),
                              j.at("box_max").get<std::vector<double>>(),
                              j.at("gamma_ramp").get<double>());
  } else if (kind == "box") {
    spec = BiasSpec::box(j.at("box_min").get<std::vector<double>>(),
                         j.at("box_max").get<std::vector<double>>(),
                         j.value("margin", 0.0));
  } else if (kind == "similarity_exp") {
    spec = BiasSpec::similarity_exp(j.at("reference").get<std::vector<double>>(),
                                    j.at("target").get<std::vector<double>>(),
                                    j.at("beta").get<double>());
  } else if (kind == "similarity_ratio") {
    spec = BiasSpec::similarity_ratio(
        j.at("train_mean").get<std::vector<double>>(),
        j.at("proportions").get<std::vector<double>>(), j.at("beta").get<double>());
  } else if (kind == "table") {
    std::map<std::int64_t, double> values;
    for (const auto& [k, v] : j.at("values").items()) {
      values[std::stoll(k)] = v.get<double>();
    }
    spec = BiasSpec::table(std::move(values));
  } else {
    throw_config("bias spec: unknown kind '" + kind + "'");
  }
  spec.clamp_max = j.value("clamp_max", 1.0);
  spec.scale = j.value("scale", 1.0);
  spec.perturb_magnitude = j.value("perturb_magnitude", 0.0);
  spec.perturb_seed = j.value("perturb_seed", std::uint64_t{0});
  return spec;
}

nlohmann::json approx_quality_to_json(const ApproxQuality& quality) {
  return {{"sup_error", quality.sup_error},
          {"c_omega_hat", quality.c_omega_hat}};
}

nlohmann::json distribution_to_json(const DebiasedDistribution& dist) {
  return {{"support", dist.support}, {"mass", dist.mass}};
}

nlohmann::json solver_result_to_json(const SolverResult& result) {
  return {{"u_hat", result.u_hat},
          {"w_hat", result.w_hat},
          {"final_grad_norm", result.final_grad_norm},
          {"iterations", result.iterations},
          {"connected", result.connected},
          {"warnings", result.warnings}};
}

nlohmann::json diagnostics_to_json(const OverlapDiagnostics& diag) {
  nlohmann::json graph = nlohmann::json::array();
  for (const auto& row : diag.graph) {
    nlohmann::json r = nlohmann::json::array();
    for (bool e : row) r.push_back(e ? 1 : 0);
    graph.push_back(r);
  }
  nlohmann::json j = {{"graph", graph},
                      {"connected", diag.connected},
                      {"components", diag.components},
                      {"epsilon_hat", diag.epsilon_hat},
                      {"kappa_hat", diag.kappa_hat},
                      {"sigma2", diag.sigma2},
                      {"warnings", diag.warnings}};
  if (std::isfinite(diag.u_bound)) {
    j["u_bound"] = diag.u_bound;
  } else {
    j["u_bound"] = nullptr;
  }
  return j;
}

std::string config_digest(const nlohmann::json& config) {
  const std::string canonical = config.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::json RunManifest::to_json() const {
  return {{"manifest_version", 1},
          {"command", command},
          {"config", config},
          {"config_digest", config_digest(config)},
          {"seed", seed},
          {"version", kVersion},
          {"inputs", inputs},
          {"outputs", outputs},
          {"wall_time_s", wall_time_s}};
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_config("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw_config(path.string() + ": " + e.what());
  }
  return j;
}

nlohmann::json load_config(const std::filesystem::path& path) {
  nlohmann::json j = read_json(path);
  if (j.contains("manifest_version") && j.contains("config")) {
    return j.at("config");
  }
  return j;
}

}  // namespace debias::io

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "debias/bias_spec.hpp"
#include "debias/estimators.hpp"
#include "debias/oracle.hpp"
#include "debias/solver.hpp"
#include "debias/types.hpp"
#include "debias/weights.hpp"

namespace debias::io {

inline constexpr const char* kVersion = "0.1.0";

// 17 significant digits: round-trip exact for 64-bit reals, "." decimal,
// used for every CSV cell.
std::string format_double(double v);

// Datasets: source,id,label,stratum,emb_0,emb_1,emb_2 with empty cells for
// absent fields. LF line endings, header row mandatory.
void write_dataset_csv(const DatasetCollection& data,
                       const std::filesystem::path& path);
DatasetCollection read_dataset_csv(const std::filesystem::path& path);

void write_omega_csv(const OmegaMatrix& omega,
                     const std::filesystem::path& path);

void write_weights_csv(const WeightVector& weights, const OmegaMatrix& omega,
                       const std::filesystem::path& path);
// Reads pi/unnormalized columns in file order (source-major, matching the
// dataset CSV row order).
WeightVector read_weights_csv(const std::filesystem::path& path);

void write_trace_csv(const std::vector<TraceEntry>& trace,
                     const std::filesystem::path& path);

// Mirrors the study's usual table layout; values are reported on the x1e-2
// scale, as the column names note.
void write_study_csv(const TwoPointStudyTable& table,
                     const std::filesystem::path& path);
nlohmann::json study_to_json(const TwoPointStudyTable& table);

nlohmann::json bias_spec_to_json(const BiasSpec& spec);
BiasSpec bias_spec_from_json(const nlohmann::json& j);

nlohmann::json approx_quality_to_json(const ApproxQuality& quality);
nlohmann::json distribution_to_json(const DebiasedDistribution& dist);

nlohmann::json solver_result_to_json(const SolverResult& result);
nlohmann::json diagnostics_to_json(const OverlapDiagnostics& diag);

// Stable content digest of a canonicalized (key-sorted) JSON document.
std::string config_digest(const nlohmann::json& config);

struct RunManifest {
  std::string command;
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  double wall_time_s = 0.0;

  nlohmann::json to_json() const;
};

void write_json(const nlohmann::json& j, const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

// Accepts either a plain config or a manifest written by a previous run
// (whose embedded config is extracted), so runs reproduce from manifests.
nlohmann::json load_config(const std::filesystem::path& path);

}  // namespace debias::io

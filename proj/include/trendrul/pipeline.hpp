#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "trendrul/cmapss.hpp"
#include "trendrul/emd.hpp"
#include "trendrul/ensemble.hpp"
#include "trendrul/metrics.hpp"
#include "trendrul/neural.hpp"

namespace trendrul::pipeline {

// Flat run configuration mirrored by the JSON config file; CLI flags
// override file values.
struct RunConfig {
  std::string subset = "FD001";
  std::string train_path;
  std::string test_path;
  std::string rul_path;
  std::vector<int> sensors = cmapss::default_sensor_set();
  int trend_level = 0;

  // ensemble
  int realizations = 100;
  double noise_std = 0.02;
  bool adaptive_noise = false;
  int max_total_sift_iterations = 5000;

  // sifting
  double sd_threshold = 0.2;
  int max_sift_iterations = 5000;
  int boundary_mirror_count = 2;

  // network
  std::array<int, 2> layer_sizes{128, 100};
  double dropout = 0.5;
  int label_cap = 130;
  double adam_alpha = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int max_iterations = 1000;
  int batch_size = 32;
  double grad_clip = 0.0;

  // score
  double score_a_early = 13.0;
  double score_a_late = 15.0;

  // run
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  int stride = 1;
  bool emit_comparison = false;
  std::vector<int> compare_units;  // empty = all training units
  int compare_bins = 50;

  emd::SiftConfig sift_config() const;
  ensemble::EnsembleConfig ensemble_config() const;
  neural::NetworkConfig network_config(int input_size) const;
  metrics::ScoreConfig score_config() const;
};

// Parses the JSON config file (flat keys named as above).
RunConfig load_config(const std::filesystem::path& path);
void apply_json_overrides(RunConfig& cfg, const std::string& json_text);

// Semantic fingerprint of a config (out_dir excluded).
std::string config_hash(const RunConfig& cfg);

// Pipeline stages. Each writes its artifacts plus a manifest.json into
// <out_dir>/<stage>/ and throws PipelineOrderError when an upstream
// artifact is missing.
void run_decompose(const RunConfig& cfg);
void run_features(const RunConfig& cfg);
void run_train(const RunConfig& cfg);
void run_predict(const RunConfig& cfg);
void run_evaluate(const RunConfig& cfg);
void run_compare_features(const RunConfig& cfg);

// Dispatch by command name; throws ConfigError for unknown commands.
void run(const std::string& command, const RunConfig& cfg);

std::string tool_version();

}  // namespace trendrul::pipeline

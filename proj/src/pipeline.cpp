#include "trendrul/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "trendrul/errors.hpp"
#include "trendrul/io.hpp"

namespace trendrul::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string role_tag(cmapss::Role role) {
  return role == cmapss::Role::Train ? "train" : "test";
}

std::string unit_tag(const cmapss::EngineUnit& u) {
  return role_tag(u.role) + "_unit" + std::to_string(u.unit_id);
}

fs::path stage_dir(const RunConfig& cfg, const std::string& stage) {
  return fs::path(cfg.out_dir) / stage;
}

// Deterministic per-job seed for one (role, unit, sensor) decomposition.
std::uint64_t job_seed(const RunConfig& cfg, const cmapss::EngineUnit& u,
                       int sensor) {
  const int role_bit = u.role == cmapss::Role::Train ? 1 : 2;
  return ensemble::stage_seed(cfg.seed, role_bit * 1000000 + u.unit_id,
                              sensor);
}

void run_parallel(std::size_t count, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(
      count, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count;
           i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

json sorted_config_json(const RunConfig& cfg) {
  json j;
  j["subset"] = cfg.subset;
  j["train_path"] = cfg.train_path;
  j["test_path"] = cfg.test_path;
  j["rul_path"] = cfg.rul_path;
  j["sensors"] = cfg.sensors;
  j["trend_level"] = cfg.trend_level;
  j["realizations"] = cfg.realizations;
  j["noise_std"] = cfg.noise_std;
  j["adaptive_noise"] = cfg.adaptive_noise;
  j["max_total_sift_iterations"] = cfg.max_total_sift_iterations;
  j["sd_threshold"] = cfg.sd_threshold;
  j["max_sift_iterations"] = cfg.max_sift_iterations;
  j["boundary_mirror_count"] = cfg.boundary_mirror_count;
  j["layer_sizes"] = cfg.layer_sizes;
  j["dropout"] = cfg.dropout;
  j["label_cap"] = cfg.label_cap;
  j["adam_alpha"] = cfg.adam_alpha;
  j["adam_beta1"] = cfg.adam_beta1;
  j["adam_beta2"] = cfg.adam_beta2;
  j["adam_epsilon"] = cfg.adam_epsilon;
  j["max_iterations"] = cfg.max_iterations;
  j["batch_size"] = cfg.batch_size;
  j["grad_clip"] = cfg.grad_clip;
  j["score_a_early"] = cfg.score_a_early;
  j["score_a_late"] = cfg.score_a_late;
  j["seed"] = cfg.seed;
  j["stride"] = cfg.stride;
  j["emit_comparison"] = cfg.emit_comparison;
  j["compare_units"] = cfg.compare_units;
  j["compare_bins"] = cfg.compare_bins;
  return j;
}

json base_manifest(const RunConfig& cfg, const std::string& command) {
  json j;
  j["command"] = command;
  j["config_hash"] = config_hash(cfg);
  j["seed"] = cfg.seed;
  j["subset"] = cfg.subset;
  j["tool_version"] = tool_version();
  j["generator"] = ensemble::noise_generator_id();
  j["files"] = json::object();
  return j;
}

// Writes one artifact file and records its fingerprint in the manifest.
void write_artifact(json& manifest, const fs::path& dir,
                    const std::string& name, const std::string& content) {
  io::write_file(dir / name, content);
  manifest["files"][name] = io::fnv1a_hex(content);
}

void write_manifest(const fs::path& dir, const json& manifest) {
  io::write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

json require_manifest(const RunConfig& cfg, const std::string& stage) {
  const fs::path path = stage_dir(cfg, stage) / "manifest.json";
  if (!fs::exists(path)) {
    throw PipelineOrderError("missing upstream artifact: " + path.string() +
                             " (run the '" + stage + "' stage first)");
  }
  return json::parse(io::read_file(path));
}

void require_data_paths(const RunConfig& cfg) {
  for (const auto& [label, p] :
       {std::pair{"train_path", cfg.train_path},
        std::pair{"test_path", cfg.test_path},
        std::pair{"rul_path", cfg.rul_path}}) {
    if (p.empty() || !fs::exists(p)) {
      throw ConfigError(std::string(label) + " does not exist: '" + p + "'");
    }
  }
}

cmapss::Dataset load_selected_dataset(const RunConfig& cfg) {
  require_data_paths(cfg);
  const cmapss::Dataset full = cmapss::parse_cmapss(
      cfg.train_path, cfg.test_path, cfg.rul_path, cfg.subset);
  return cmapss::select_sensors(full, cfg.sensors);
}

std::vector<NormalizationStats> fit_stats(const cmapss::Dataset& selected) {
  const auto train_units = selected.units_with_role(cmapss::Role::Train);
  std::vector<NormalizationStats> stats;
  stats.reserve(selected.sensor_ids.size());
  for (std::size_t c = 0; c < selected.sensor_ids.size(); ++c) {
    const int sensor_id = selected.sensor_ids[c];
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& u : train_units) {
      lo = std::min(lo, u.sensors.col(static_cast<Eigen::Index>(c)).minCoeff());
      hi = std::max(hi, u.sensors.col(static_cast<Eigen::Index>(c)).maxCoeff());
    }
    NormalizationStats s{lo, hi, sensor_id};
    if (s.degenerate()) {
      throw SensorDegenerate("sensor " + std::to_string(sensor_id) +
                             " is constant over the training split; prune it");
    }
    stats.push_back(s);
  }
  return stats;
}

std::string decomposition_csv(const emd::Decomposition& d) {
  io::CsvTable table;
  table.header.push_back("cycle");
  for (std::size_t k = 0; k < d.imfs.size(); ++k) {
    table.header.push_back("imf_" + std::to_string(k + 1));
  }
  table.header.push_back("residue");
  const std::size_t n = d.residue.size();
  table.rows.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    auto& row = table.rows[t];
    row.reserve(d.imfs.size() + 2);
    row.push_back(d.residue.start_cycle + static_cast<double>(t));
    for (const auto& imf : d.imfs) row.push_back(imf.values[t]);
    row.push_back(d.residue.values[t]);
  }
  return io::to_csv(table);
}

emd::Decomposition decomposition_from_csv(const std::string& text) {
  const io::CsvTable table = io::parse_csv(text);
  if (table.header.size() < 2 || table.header.front() != "cycle" ||
      table.header.back() != "residue") {
    throw ParseError(1, "not a decomposition CSV");
  }
  const std::size_t modes = table.header.size() - 2;
  const std::size_t n = table.rows.size();
  emd::Decomposition d;
  d.source_length = static_cast<int>(n);
  const int start = n > 0 ? static_cast<int>(table.rows[0][0]) : 1;
  d.imfs.assign(modes, Series(std::vector<double>(n, 0.0), start));
  d.residue = Series(std::vector<double>(n, 0.0), start);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t k = 0; k < modes; ++k) {
      d.imfs[k].values[t] = table.rows[t][k + 1];
    }
    d.residue.values[t] = table.rows[t][modes + 1];
  }
  return d;
}

Series reconstruct_signal(const emd::Decomposition& d) {
  Series x = d.residue;
  for (const auto& imf : d.imfs) {
    for (std::size_t t = 0; t < x.size(); ++t) x.values[t] += imf.values[t];
  }
  return x;
}

// Trend level clamped to the number of available modes (short desk-scale
// series can produce K < v).
Series trend_level_or_max(const emd::Decomposition& d, int v) {
  const int k = static_cast<int>(d.imfs.size());
  return ensemble::trend_feature(d, std::min(v, k)).values;
}

struct FeatureBundle {
  std::string tag;
  cmapss::Role role = cmapss::Role::Train;
  int unit_id = 0;
  Eigen::MatrixXd features;  // T x |J|
  std::vector<double> labels;  // capped RUL, cycles
};

std::vector<FeatureBundle> load_feature_bundles(const RunConfig& cfg,
                                                const json& manifest) {
  std::vector<FeatureBundle> bundles;
  const fs::path dir = stage_dir(cfg, "features");
  for (const auto& [name, hash] : manifest.at("files").items()) {
    if (name.find("_comparison") != std::string::npos) continue;
    FeatureBundle b;
    b.tag = name.substr(0, name.size() - 4);  // strip .csv
    b.role = b.tag.rfind("train", 0) == 0 ? cmapss::Role::Train
                                          : cmapss::Role::Test;
    b.unit_id = std::stoi(b.tag.substr(b.tag.find("unit") + 4));
    const io::CsvTable table = io::parse_csv(io::read_file(dir / name));
    const std::size_t n = table.rows.size();
    const std::size_t width = table.header.size() - 2;  // cycle, ..., label
    b.features.resize(static_cast<Eigen::Index>(n),
                      static_cast<Eigen::Index>(width));
    b.labels.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
      for (std::size_t c = 0; c < width; ++c) {
        b.features(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)) =
            table.rows[t][c + 1];
      }
      b.labels[t] = table.rows[t][width + 1];
    }
    bundles.push_back(std::move(b));
  }
  std::sort(bundles.begin(), bundles.end(),
            [](const FeatureBundle& a, const FeatureBundle& b) {
              return a.tag < b.tag;
            });
  return bundles;
}

std::vector<NormalizationStats> stats_from_manifest(const json& manifest) {
  std::vector<NormalizationStats> stats;
  for (const auto& s : manifest.at("normalization")) {
    stats.push_back({s.at("min").get<double>(), s.at("max").get<double>(),
                     s.at("sensor").get<int>()});
  }
  return stats;
}

json stats_to_json(const std::vector<NormalizationStats>& stats) {
  json out = json::array();
  for (const auto& s : stats) {
    out.push_back({{"sensor", s.sensor}, {"min", s.min}, {"max", s.max}});
  }
  return out;
}

}  // namespace

emd::SiftConfig RunConfig::sift_config() const {
  emd::SiftConfig s;
  s.sd_threshold = sd_threshold;
  s.max_sift_iterations = max_sift_iterations;
  s.boundary_mirror_count = boundary_mirror_count;
  return s;
}

ensemble::EnsembleConfig RunConfig::ensemble_config() const {
  ensemble::EnsembleConfig e;
  e.realizations = realizations;
  e.noise_std = noise_std;
  e.adaptive_noise = adaptive_noise;
  e.max_total_sift_iterations = max_total_sift_iterations;
  e.base_seed = seed;
  return e;
}

neural::NetworkConfig RunConfig::network_config(int input_size) const {
  neural::NetworkConfig n;
  n.input_size = input_size;
  n.layer_sizes = layer_sizes;
  n.dropout_prob = dropout;
  n.label_cap = label_cap;
  n.adam = {adam_alpha, adam_beta1, adam_beta2, adam_epsilon};
  n.max_iterations = max_iterations;
  n.batch_size = batch_size;
  n.grad_clip = grad_clip;
  return n;
}

metrics::ScoreConfig RunConfig::score_config() const {
  return {score_a_early, score_a_late};
}

std::string tool_version() { return TRENDRUL_VERSION; }

void apply_json_overrides(RunConfig& cfg, const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid config JSON: ") + e.what());
  }
  if (!j.is_object()) {
    throw ConfigError("config JSON must be an object of flat keys");
  }
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "subset") cfg.subset = value.get<std::string>();
      else if (key == "train_path") cfg.train_path = value.get<std::string>();
      else if (key == "test_path") cfg.test_path = value.get<std::string>();
      else if (key == "rul_path") cfg.rul_path = value.get<std::string>();
      else if (key == "sensors") cfg.sensors = value.get<std::vector<int>>();
      else if (key == "trend_level") cfg.trend_level = value.get<int>();
      else if (key == "realizations") cfg.realizations = value.get<int>();
      else if (key == "noise_std") cfg.noise_std = value.get<double>();
      else if (key == "adaptive_noise") cfg.adaptive_noise = value.get<bool>();
      else if (key == "max_total_sift_iterations")
        cfg.max_total_sift_iterations = value.get<int>();
      else if (key == "sd_threshold") cfg.sd_threshold = value.get<double>();
      else if (key == "max_sift_iterations")
        cfg.max_sift_iterations = value.get<int>();
      else if (key == "boundary_mirror_count")
        cfg.boundary_mirror_count = value.get<int>();
      else if (key == "layer_sizes")
        cfg.layer_sizes = value.get<std::array<int, 2>>();
      else if (key == "dropout") cfg.dropout = value.get<double>();
      else if (key == "label_cap") cfg.label_cap = value.get<int>();
      else if (key == "adam_alpha") cfg.adam_alpha = value.get<double>();
      else if (key == "adam_beta1") cfg.adam_beta1 = value.get<double>();
      else if (key == "adam_beta2") cfg.adam_beta2 = value.get<double>();
      else if (key == "adam_epsilon") cfg.adam_epsilon = value.get<double>();
      else if (key == "max_iterations") cfg.max_iterations = value.get<int>();
      else if (key == "batch_size") cfg.batch_size = value.get<int>();
      else if (key == "grad_clip") cfg.grad_clip = value.get<double>();
      else if (key == "score_a_early") cfg.score_a_early = value.get<double>();
      else if (key == "score_a_late") cfg.score_a_late = value.get<double>();
      else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else if (key == "out_dir") cfg.out_dir = value.get<std::string>();
      else if (key == "stride") cfg.stride = value.get<int>();
      else if (key == "emit_comparison")
        cfg.emit_comparison = value.get<bool>();
      else if (key == "compare_units")
        cfg.compare_units = value.get<std::vector<int>>();
      else if (key == "compare_bins") cfg.compare_bins = value.get<int>();
      else throw ConfigError("unknown config key: '" + key + "'");
    } catch (const json::exception& e) {
      throw ConfigError("bad value for config key '" + key + "': " + e.what());
    }
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  RunConfig cfg;
  apply_json_overrides(cfg, io::read_file(path));
  return cfg;
}

std::string config_hash(const RunConfig& cfg) {
  return io::fnv1a_hex(sorted_config_json(cfg).dump());
}

void run_decompose(const RunConfig& cfg) {
  const cmapss::Dataset selected = load_selected_dataset(cfg);
  const std::vector<NormalizationStats> stats = fit_stats(selected);
  const fs::path dir = stage_dir(cfg, "decompose");
  fs::create_directories(dir);

  struct Job {
    const cmapss::EngineUnit* unit;
    std::size_t column;
  };
  std::vector<Job> jobs;
  for (const auto& unit : selected.units) {
    for (std::size_t c = 0; c < selected.sensor_ids.size(); ++c) {
      jobs.push_back({&unit, c});
    }
  }
  std::vector<std::string> names(jobs.size());
  std::vector<std::string> contents(jobs.size());
  run_parallel(jobs.size(), [&](std::size_t idx) {
    const Job& job = jobs[idx];
    const int sensor_id = selected.sensor_ids[job.column];
    Series raw;
    raw.start_cycle = 1;
    const auto col = job.unit->sensors.col(static_cast<Eigen::Index>(job.column));
    raw.values.assign(col.begin(), col.end());
    const Series normalized = normalize_series(raw, stats[job.column]);

    ensemble::EnsembleConfig ecfg = cfg.ensemble_config();
    ecfg.base_seed = job_seed(cfg, *job.unit, sensor_id);
    const emd::Decomposition d =
        ensemble::ceemd(normalized, ecfg, cfg.sift_config());
    names[idx] = unit_tag(*job.unit) + "_s" + std::to_string(sensor_id) + ".csv";
    contents[idx] = decomposition_csv(d);
  });

  json manifest = base_manifest(cfg, "decompose");
  manifest["sensors"] = selected.sensor_ids;
  manifest["normalization"] = stats_to_json(stats);
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    write_artifact(manifest, dir, names[i], contents[i]);
  }
  write_manifest(dir, manifest);
}

void run_features(const RunConfig& cfg) {
  const json upstream = require_manifest(cfg, "decompose");
  const cmapss::Dataset selected = load_selected_dataset(cfg);
  const std::vector<int> sensors = upstream.at("sensors").get<std::vector<int>>();
  if (sensors != selected.sensor_ids) {
    throw ConfigError("decompose artifacts were built with a different "
                      "sensor set; re-run decompose");
  }
  const fs::path in_dir = stage_dir(cfg, "decompose");
  const fs::path dir = stage_dir(cfg, "features");
  fs::create_directories(dir);

  json manifest = base_manifest(cfg, "features");
  manifest["trend_level"] = cfg.trend_level;
  manifest["label_cap"] = cfg.label_cap;
  manifest["normalization"] = upstream.at("normalization");

  for (const auto& unit : selected.units) {
    const std::size_t n = static_cast<std::size_t>(unit.cycles());
    io::CsvTable table;
    table.header.push_back("cycle");
    io::CsvTable comparison;
    comparison.header.push_back("cycle");

    std::vector<Series> columns;
    std::vector<Series> extra_columns;
    for (int sensor_id : sensors) {
      const std::string name =
          unit_tag(unit) + "_s" + std::to_string(sensor_id) + ".csv";
      if (!fs::exists(in_dir / name)) {
        throw PipelineOrderError("decompose output missing: " + name);
      }
      const emd::Decomposition d =
          decomposition_from_csv(io::read_file(in_dir / name));
      columns.push_back(trend_level_or_max(d, cfg.trend_level));
      table.header.push_back("q_s" + std::to_string(sensor_id));
      if (cfg.emit_comparison) {
        const Series normalized = reconstruct_signal(d);
        ensemble::EnsembleConfig ecfg = cfg.ensemble_config();
        ecfg.base_seed = job_seed(cfg, unit, sensor_id) ^ 0x5eedULL;
        const emd::Decomposition e =
            ensemble::eemd(normalized, ecfg, cfg.sift_config());
        extra_columns.push_back(trend_level_or_max(e, cfg.trend_level));
        extra_columns.push_back(sliding_mean(normalized, 5));
        comparison.header.push_back("e_s" + std::to_string(sensor_id));
        comparison.header.push_back("mean_s" + std::to_string(sensor_id));
      }
    }
    table.header.push_back("rul_label");
    const Series labels = cmapss::label_rul(unit, cfg.label_cap);

    table.rows.resize(n);
    comparison.rows.resize(cfg.emit_comparison ? n : 0);
    for (std::size_t t = 0; t < n; ++t) {
      auto& row = table.rows[t];
      row.push_back(1.0 + static_cast<double>(t));
      for (const auto& col : columns) row.push_back(col.values[t]);
      row.push_back(labels.values[t]);
      if (cfg.emit_comparison) {
        auto& crow = comparison.rows[t];
        crow.push_back(1.0 + static_cast<double>(t));
        for (const auto& col : extra_columns) crow.push_back(col.values[t]);
      }
    }
    write_artifact(manifest, dir, unit_tag(unit) + ".csv", io::to_csv(table));
    if (cfg.emit_comparison) {
      write_artifact(manifest, dir, unit_tag(unit) + "_comparison.csv",
                     io::to_csv(comparison));
    }
  }
  write_manifest(dir, manifest);
}

void run_train(const RunConfig& cfg) {
  const json upstream = require_manifest(cfg, "features");
  const std::vector<FeatureBundle> bundles = load_feature_bundles(cfg, upstream);

  std::vector<neural::SequenceExample> examples;
  for (const auto& b : bundles) {
    if (b.role != cmapss::Role::Train) continue;
    const int n = static_cast<int>(b.features.rows());
    // The full run plus crops of the trend-feature sequence; the labels of
    // a crop are the prefix of the unit's labels, so its final label is k.
    std::vector<int> lengths{n};
    for (int k : cmapss::crop_depths(n, cfg.stride)) lengths.push_back(n - k);
    for (int len : lengths) {
      neural::SequenceExample ex;
      ex.features = b.features.topRows(len);
      ex.labels.resize(len);
      for (int t = 0; t < len; ++t) {
        ex.labels(t) = neural::normalize_rul(b.labels[static_cast<std::size_t>(t)],
                                             cfg.label_cap);
      }
      ex.mask.assign(static_cast<std::size_t>(len), true);
      examples.push_back(std::move(ex));
    }
  }
  if (examples.empty()) {
    throw ConfigError("no training sequences found in the features stage");
  }

  const int width = static_cast<int>(examples[0].features.cols());
  std::vector<double> wall_ms;
  neural::TrainState state = neural::train(cfg.network_config(width), examples,
                                           cfg.seed, &wall_ms);
  state.normalization = stats_from_manifest(upstream);

  const fs::path dir = stage_dir(cfg, "train");
  fs::create_directories(dir);
  json manifest = base_manifest(cfg, "train");
  manifest["training_sequences"] = examples.size();

  neural::save_checkpoint(state, dir / "checkpoint.json");
  manifest["files"]["checkpoint.json"] =
      io::fnv1a_hex(io::read_file(dir / "checkpoint.json"));

  // The loss log carries wall-clock timings, so the manifest fingerprints
  // only its (step, loss) content.
  std::ostringstream log;
  std::ostringstream loss_only;
  log << "step,loss,wall_ms\n";
  for (std::size_t s = 0; s < state.loss_history.size(); ++s) {
    log << s + 1 << ',' << io::format_double(state.loss_history[s]) << ','
        << io::format_double(wall_ms[s]) << '\n';
    loss_only << s + 1 << ',' << io::format_double(state.loss_history[s])
              << '\n';
  }
  io::write_file(dir / "loss_log.csv", log.str());
  manifest["loss_hash"] = io::fnv1a_hex(loss_only.str());
  write_manifest(dir, manifest);
}

void run_predict(const RunConfig& cfg) {
  const json features_manifest = require_manifest(cfg, "features");
  require_manifest(cfg, "train");
  const fs::path ckpt = stage_dir(cfg, "train") / "checkpoint.json";
  if (!fs::exists(ckpt)) {
    throw PipelineOrderError("missing checkpoint: " + ckpt.string());
  }
  const neural::TrainState state = neural::load_checkpoint(ckpt);
  const std::vector<FeatureBundle> bundles =
      load_feature_bundles(cfg, features_manifest);

  const fs::path dir = stage_dir(cfg, "predict");
  fs::create_directories(dir);
  json manifest = base_manifest(cfg, "predict");

  io::CsvTable last_points;
  last_points.header = {"unit_id", "rul_pred", "rul_label"};
  for (const auto& b : bundles) {
    if (b.role != cmapss::Role::Test) continue;
    const neural::Prediction pred = neural::predict(state, b.features);
    io::CsvTable traj;
    traj.header = {"cycle", "rul_pred", "rul_label"};
    traj.rows.resize(b.labels.size());
    for (std::size_t t = 0; t < b.labels.size(); ++t) {
      traj.rows[t] = {1.0 + static_cast<double>(t),
                      pred.per_cycle_rul.values[t], b.labels[t]};
    }
    write_artifact(manifest, dir, b.tag + "_trajectory.csv", io::to_csv(traj));
    last_points.rows.push_back({static_cast<double>(b.unit_id),
                                pred.last_point, b.labels.back()});
  }
  if (last_points.rows.empty()) {
    throw ConfigError("no test units found in the features stage");
  }
  write_artifact(manifest, dir, "last_point.csv", io::to_csv(last_points));
  write_manifest(dir, manifest);
}

void run_evaluate(const RunConfig& cfg) {
  require_manifest(cfg, "predict");
  const fs::path src = stage_dir(cfg, "predict") / "last_point.csv";
  if (!fs::exists(src)) {
    throw PipelineOrderError("missing prediction output: " + src.string());
  }
  const io::CsvTable table = io::parse_csv(io::read_file(src));
  std::vector<double> pred, truth;
  json per_unit = json::array();
  for (const auto& row : table.rows) {
    pred.push_back(row[1]);
    truth.push_back(row[2]);
    per_unit.push_back({{"unit_id", static_cast<int>(row[0])},
                        {"pred", row[1]},
                        {"label", row[2]}});
  }

  const metrics::ScoreConfig score_cfg = cfg.score_config();
  json report;
  report["subset"] = cfg.subset;
  report["units"] = pred.size();
  report["score"] = metrics::phm_score(pred, truth, score_cfg);
  report["rmse"] = metrics::rmse(pred, truth);
  report["score_a_early"] = score_cfg.a_early;
  report["score_a_late"] = score_cfg.a_late;
  report["per_unit"] = per_unit;

  const fs::path dir = stage_dir(cfg, "evaluate");
  fs::create_directories(dir);
  json manifest = base_manifest(cfg, "evaluate");
  write_artifact(manifest, dir, "report.json", report.dump(2) + "\n");
  write_manifest(dir, manifest);
}

void run_compare_features(const RunConfig& cfg) {
  const json upstream = require_manifest(cfg, "decompose");
  const std::vector<int> sensors = upstream.at("sensors").get<std::vector<int>>();
  const fs::path in_dir = stage_dir(cfg, "decompose");

  // Training units present in the decompose stage, optionally restricted.
  std::vector<int> unit_ids;
  for (const auto& [name, hash] : upstream.at("files").items()) {
    if (name.rfind("train_unit", 0) != 0) continue;
    const int id = std::stoi(name.substr(10));
    if (!cfg.compare_units.empty() &&
        std::find(cfg.compare_units.begin(), cfg.compare_units.end(), id) ==
            cfg.compare_units.end()) {
      continue;
    }
    if (std::find(unit_ids.begin(), unit_ids.end(), id) == unit_ids.end()) {
      unit_ids.push_back(id);
    }
  }
  std::sort(unit_ids.begin(), unit_ids.end());
  if (unit_ids.size() < 2) {
    throw ConfigError("compare-features needs at least 2 training units");
  }

  const std::vector<std::string> feature_names{"Q_0", "Q_1", "Q_2", "E_0",
                                               "E_1", "E_2", "mean", "raw"};
  io::CsvTable mpd_table, mare_table;
  mpd_table.header.push_back("feature");
  mare_table.header.push_back("feature");
  for (int j : sensors) {
    mpd_table.header.push_back("s" + std::to_string(j));
    mare_table.header.push_back("s" + std::to_string(j));
  }
  std::vector<std::vector<double>> mpd_rows(feature_names.size());
  std::vector<std::vector<double>> mare_rows(feature_names.size());

  for (int sensor_id : sensors) {
    std::map<int, Series> raw;
    std::map<std::string, std::map<int, Series>> feature_sets;
    for (int id : unit_ids) {
      const std::string name =
          "train_unit" + std::to_string(id) + "_s" +
          std::to_string(sensor_id) + ".csv";
      if (!fs::exists(in_dir / name)) {
        throw PipelineOrderError("decompose output missing: " + name);
      }
      const emd::Decomposition d =
          decomposition_from_csv(io::read_file(in_dir / name));
      const Series normalized = reconstruct_signal(d);
      raw[id] = normalized;
      feature_sets["raw"][id] = normalized;
      for (int v = 0; v <= 2; ++v) {
        feature_sets["Q_" + std::to_string(v)][id] = trend_level_or_max(d, v);
      }
      ensemble::EnsembleConfig ecfg = cfg.ensemble_config();
      ecfg.base_seed =
          ensemble::stage_seed(cfg.seed, 3000000 + id, sensor_id);
      const emd::Decomposition e =
          ensemble::eemd(normalized, ecfg, cfg.sift_config());
      for (int v = 0; v <= 2; ++v) {
        feature_sets["E_" + std::to_string(v)][id] = trend_level_or_max(e, v);
      }
      feature_sets["mean"][id] = sliding_mean(normalized, 5);
    }
    const metrics::DistributionTrack track =
        metrics::baseline_distribution(raw, cfg.compare_bins);
    for (std::size_t f = 0; f < feature_names.size(); ++f) {
      mpd_rows[f].push_back(metrics::mpd(feature_sets[feature_names[f]], track));
      mare_rows[f].push_back(
          metrics::mare(feature_sets[feature_names[f]], track));
    }
  }

  const fs::path dir = stage_dir(cfg, "compare_features");
  fs::create_directories(dir);
  json manifest = base_manifest(cfg, "compare-features");
  manifest["estimator"] = "empirical-gaussian-baseline";
  manifest["bins"] = cfg.compare_bins;
  manifest["units"] = unit_ids;

  // Feature names go in the first column; the numeric CSV writer handles
  // doubles only, so assemble these two tables by hand.
  const auto render = [&](const io::CsvTable& header_only,
                          const std::vector<std::vector<double>>& rows) {
    std::ostringstream out;
    for (std::size_t i = 0; i < header_only.header.size(); ++i) {
      if (i) out << ',';
      out << header_only.header[i];
    }
    out << '\n';
    for (std::size_t f = 0; f < feature_names.size(); ++f) {
      out << feature_names[f];
      for (double v : rows[f]) out << ',' << io::format_double(v);
      out << '\n';
    }
    return out.str();
  };
  write_artifact(manifest, dir, "mpd.csv", render(mpd_table, mpd_rows));
  write_artifact(manifest, dir, "mare.csv", render(mare_table, mare_rows));
  write_manifest(dir, manifest);
}

void run(const std::string& command, const RunConfig& cfg) {
  if (command == "decompose") run_decompose(cfg);
  else if (command == "features") run_features(cfg);
  else if (command == "train") run_train(cfg);
  else if (command == "predict") run_predict(cfg);
  else if (command == "evaluate") run_evaluate(cfg);
  else if (command == "compare-features") run_compare_features(cfg);
  else throw ConfigError("unknown command: '" + command + "'");
}

}  // namespace trendrul::pipeline

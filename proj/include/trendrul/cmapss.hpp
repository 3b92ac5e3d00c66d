#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "trendrul/timeseries.hpp"

namespace trendrul::cmapss {

inline constexpr int kSensorCount = 21;
inline constexpr int kSettingCount = 3;
inline constexpr int kDefaultRulCap = 130;

// Sensors retained after pruning the flat channels.
const std::vector<int>& default_sensor_set();

enum class Role { Train, Test };

struct EngineUnit {
  int unit_id = 0;
  Eigen::MatrixXd op_settings;  // cycles x 3
  Eigen::MatrixXd sensors;      // cycles x |retained sensors|
  Role role = Role::Train;
  // RUL at the last recorded cycle: 0 for parsed train units, from the
  // subset RUL file for test units, and the crop depth k for augmented
  // training copies.
  int final_rul = 0;

  int cycles() const noexcept { return static_cast<int>(sensors.rows()); }
};

struct Dataset {
  std::string subset;             // FD001..FD004
  std::vector<EngineUnit> units;  // train units then test units, each ascending
  std::vector<int> sensor_ids;    // 1-based ids of the retained columns

  std::vector<EngineUnit> units_with_role(Role role) const;
};

// Static Table-1 style metadata per subset, carried into manifests.
struct SubsetInfo {
  int train_units = 0;
  int test_units = 0;
  int operating_conditions = 0;
  int fault_modes = 0;
};
SubsetInfo subset_info(const std::string& subset);

// One training item: trend-feature rows, normalized labels in [-1, 1] and
// a front-padding mask (false rows are all-zero and appear only as a
// prefix).
struct LabeledSequence {
  Eigen::MatrixXd features;   // T x |J|
  Eigen::VectorXd labels;     // T, normalized RUL
  std::vector<bool> mask;     // T, true = real timestep
  int unit_id = 0;
  int crop_k = 0;

  int length() const noexcept { return static_cast<int>(features.rows()); }
};

// Parses the train/test data files (26 whitespace-separated fields per row)
// and attaches final RULs from the ground-truth file to the test units.
Dataset parse_cmapss(const std::filesystem::path& train_path,
                     const std::filesystem::path& test_path,
                     const std::filesystem::path& rul_path,
                     const std::string& subset = "FD001");

// Parses a single data file; role applies to every unit.
std::vector<EngineUnit> parse_cmapss_file(const std::filesystem::path& path,
                                          Role role);

// Keeps only the sensor columns in J (ascending 1-based indices).
Dataset select_sensors(const Dataset& d, const std::vector<int>& sensor_set);

// Piecewise-linear RUL per cycle: min(cap, n - t + final_rul), t 1-based.
Series label_rul(const EngineUnit& unit, int cap = kDefaultRulCap);

// Truncated copies per the crop rule: for k = 1, 1+stride, ... up to
// min(100, n-1), a copy of the unit's first n-k cycles whose final RUL
// is k. Train units only.
std::vector<std::pair<EngineUnit, int>> augment(
    const std::vector<EngineUnit>& train_units, int stride = 1);

// The crop depths augment() uses for a unit of length n.
std::vector<int> crop_depths(int cycles, int stride);

// Front-pads every sequence with zero rows and mask=false flags up to
// target_length (labels of padded rows are 0).
std::vector<LabeledSequence> pad_and_mask(
    const std::vector<LabeledSequence>& sequences, int target_length);

// Serializes a unit back to the 26-column text form (round-trips the
// numeric fields exactly). Requires all 21 sensor columns.
std::string serialize_unit(const EngineUnit& unit);

}  // namespace trendrul::cmapss

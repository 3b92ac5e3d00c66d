#include "trendrul/cmapss.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "trendrul/errors.hpp"
#include "trendrul/io.hpp"

namespace trendrul::cmapss {

namespace {

constexpr int kFieldCount = 2 + kSettingCount + kSensorCount;  // 26

struct RawRow {
  int cycle = 0;
  std::array<double, kSettingCount> settings{};
  std::array<double, kSensorCount> sensors{};
};

std::vector<double> parse_fields(const std::string& line, std::size_t lineno) {
  std::vector<double> fields;
  std::istringstream in(line);
  std::string token;
  while (in >> token) {
    double v = 0.0;
    const auto* begin = token.data();
    const auto* end = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end) {
      throw ParseError(lineno, "line " + std::to_string(lineno) +
                                   ": non-numeric field '" + token + "'");
    }
    fields.push_back(v);
  }
  return fields;
}

}  // namespace

const std::vector<int>& default_sensor_set() {
  static const std::vector<int> set{2, 3, 4, 7, 8, 9, 11, 12, 13, 15, 17, 20, 21};
  return set;
}

SubsetInfo subset_info(const std::string& subset) {
  if (subset == "FD001") return {100, 100, 1, 1};
  if (subset == "FD002") return {260, 259, 6, 1};
  if (subset == "FD003") return {100, 100, 1, 2};
  if (subset == "FD004") return {249, 248, 6, 2};
  throw ConfigError("unknown C-MAPSS subset: " + subset);
}

std::vector<EngineUnit> parse_cmapss_file(const std::filesystem::path& path,
                                          Role role) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open C-MAPSS file: " + path.string());
  }
  std::map<int, std::vector<RawRow>> by_unit;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::vector<double> fields = parse_fields(line, lineno);
    if (fields.size() != kFieldCount) {
      throw ParseError(lineno, "line " + std::to_string(lineno) + ": expected " +
                                   std::to_string(kFieldCount) +
                                   " fields, got " +
                                   std::to_string(fields.size()));
    }
    const int unit_id = static_cast<int>(fields[0]);
    const int cycle = static_cast<int>(fields[1]);
    if (unit_id < 1 || cycle < 1) {
      throw ParseError(lineno, "line " + std::to_string(lineno) +
                                   ": unit and cycle must be >= 1");
    }
    RawRow row;
    row.cycle = cycle;
    for (int s = 0; s < kSettingCount; ++s) {
      row.settings[static_cast<std::size_t>(s)] =
          fields[static_cast<std::size_t>(2 + s)];
    }
    for (int s = 0; s < kSensorCount; ++s) {
      row.sensors[static_cast<std::size_t>(s)] =
          fields[static_cast<std::size_t>(2 + kSettingCount + s)];
    }
    by_unit[unit_id].push_back(row);
  }

  std::vector<EngineUnit> units;
  units.reserve(by_unit.size());
  for (auto& [unit_id, rows] : by_unit) {
    std::stable_sort(rows.begin(), rows.end(),
                     [](const RawRow& a, const RawRow& b) {
                       return a.cycle < b.cycle;
                     });
    EngineUnit unit;
    unit.unit_id = unit_id;
    unit.role = role;
    const int n = static_cast<int>(rows.size());
    unit.op_settings.resize(n, kSettingCount);
    unit.sensors.resize(n, kSensorCount);
    for (int r = 0; r < n; ++r) {
      for (int s = 0; s < kSettingCount; ++s) {
        unit.op_settings(r, s) =
            rows[static_cast<std::size_t>(r)].settings[static_cast<std::size_t>(s)];
      }
      for (int s = 0; s < kSensorCount; ++s) {
        unit.sensors(r, s) =
            rows[static_cast<std::size_t>(r)].sensors[static_cast<std::size_t>(s)];
      }
    }
    units.push_back(std::move(unit));
  }
  return units;
}

Dataset parse_cmapss(const std::filesystem::path& train_path,
                     const std::filesystem::path& test_path,
                     const std::filesystem::path& rul_path,
                     const std::string& subset) {
  Dataset d;
  d.subset = subset;
  d.sensor_ids.resize(kSensorCount);
  for (int j = 0; j < kSensorCount; ++j) d.sensor_ids[static_cast<std::size_t>(j)] = j + 1;

  d.units = parse_cmapss_file(train_path, Role::Train);
  std::vector<EngineUnit> test_units = parse_cmapss_file(test_path, Role::Test);

  std::ifstream rul_in(rul_path);
  if (!rul_in) {
    throw ConfigError("cannot open RUL file: " + rul_path.string());
  }
  std::vector<int> ruls;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(rul_in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::vector<double> fields = parse_fields(line, lineno);
    if (fields.size() != 1 || fields[0] < 0) {
      throw ParseError(lineno, "line " + std::to_string(lineno) +
                                   ": RUL file rows hold one value >= 0");
    }
    ruls.push_back(static_cast<int>(fields[0]));
  }
  if (ruls.size() != test_units.size()) {
    throw RulFileMismatch("RUL file has " + std::to_string(ruls.size()) +
                          " entries for " + std::to_string(test_units.size()) +
                          " test units");
  }
  for (std::size_t r = 0; r < test_units.size(); ++r) {
    test_units[r].final_rul = ruls[r];
  }
  d.units.insert(d.units.end(), std::make_move_iterator(test_units.begin()),
                 std::make_move_iterator(test_units.end()));
  return d;
}

std::vector<EngineUnit> Dataset::units_with_role(Role role) const {
  std::vector<EngineUnit> out;
  for (const auto& u : units) {
    if (u.role == role) out.push_back(u);
  }
  return out;
}

Dataset select_sensors(const Dataset& d, const std::vector<int>& sensor_set) {
  if (sensor_set.empty()) {
    throw EmptySensorSet("sensor set must not be empty");
  }
  std::vector<int> wanted = sensor_set;
  std::sort(wanted.begin(), wanted.end());
  wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());

  std::vector<int> columns;
  for (int j : wanted) {
    if (j < 1 || j > kSensorCount) {
      throw ConfigError("sensor index out of range 1..21: " +
                        std::to_string(j));
    }
    const auto it = std::find(d.sensor_ids.begin(), d.sensor_ids.end(), j);
    if (it == d.sensor_ids.end()) {
      throw ConfigError("sensor " + std::to_string(j) +
                        " is not present in the dataset");
    }
    columns.push_back(static_cast<int>(it - d.sensor_ids.begin()));
  }

  Dataset out;
  out.subset = d.subset;
  out.sensor_ids = wanted;
  out.units.reserve(d.units.size());
  for (const auto& u : d.units) {
    EngineUnit selected = u;
    selected.sensors.resize(u.sensors.rows(),
                            static_cast<Eigen::Index>(columns.size()));
    for (std::size_t c = 0; c < columns.size(); ++c) {
      selected.sensors.col(static_cast<Eigen::Index>(c)) =
          u.sensors.col(columns[c]);
    }
    out.units.push_back(std::move(selected));
  }
  return out;
}

Series label_rul(const EngineUnit& unit, int cap) {
  if (cap < 1) {
    throw ConfigError("RUL cap must be >= 1");
  }
  const int n = unit.cycles();
  Series labels;
  labels.start_cycle = 1;
  labels.values.resize(static_cast<std::size_t>(n));
  for (int t = 1; t <= n; ++t) {
    labels.values[static_cast<std::size_t>(t - 1)] =
        std::min(cap, n - t + unit.final_rul);
  }
  return labels;
}

std::vector<int> crop_depths(int cycles, int stride) {
  if (stride < 1) {
    throw ConfigError("augmentation stride must be >= 1");
  }
  std::vector<int> depths;
  for (int k = 1; k <= 100 && k < cycles; k += stride) {
    depths.push_back(k);
  }
  return depths;
}

std::vector<std::pair<EngineUnit, int>> augment(
    const std::vector<EngineUnit>& train_units, int stride) {
  std::vector<std::pair<EngineUnit, int>> out;
  for (const auto& unit : train_units) {
    if (unit.role != Role::Train) {
      throw RoleError("augment applies to training units only (unit " +
                      std::to_string(unit.unit_id) + " is a test unit)");
    }
    for (int k : crop_depths(unit.cycles(), stride)) {
      const int kept = unit.cycles() - k;
      EngineUnit copy;
      copy.unit_id = unit.unit_id;
      copy.role = Role::Train;
      copy.final_rul = k;
      copy.op_settings = unit.op_settings.topRows(kept);
      copy.sensors = unit.sensors.topRows(kept);
      out.emplace_back(std::move(copy), k);
    }
  }
  return out;
}

std::vector<LabeledSequence> pad_and_mask(
    const std::vector<LabeledSequence>& sequences, int target_length) {
  std::vector<LabeledSequence> out;
  out.reserve(sequences.size());
  for (const auto& seq : sequences) {
    const int len = seq.length();
    if (len > target_length) {
      throw PadTooShort("sequence of length " + std::to_string(len) +
                        " exceeds the padding target " +
                        std::to_string(target_length));
    }
    const int pad = target_length - len;
    LabeledSequence padded;
    padded.unit_id = seq.unit_id;
    padded.crop_k = seq.crop_k;
    padded.features = Eigen::MatrixXd::Zero(target_length, seq.features.cols());
    padded.features.bottomRows(len) = seq.features;
    padded.labels = Eigen::VectorXd::Zero(target_length);
    padded.labels.tail(len) = seq.labels;
    padded.mask.assign(static_cast<std::size_t>(pad), false);
    padded.mask.insert(padded.mask.end(), seq.mask.begin(), seq.mask.end());
    out.push_back(std::move(padded));
  }
  return out;
}

std::string serialize_unit(const EngineUnit& unit) {
  if (unit.sensors.cols() != kSensorCount ||
      unit.op_settings.cols() != kSettingCount) {
    throw ShapeError("serialize_unit requires the full 26-column layout");
  }
  std::ostringstream out;
  for (int r = 0; r < unit.cycles(); ++r) {
    out << unit.unit_id << ' ' << (r + 1);
    for (int s = 0; s < kSettingCount; ++s) {
      out << ' ' << io::format_double(unit.op_settings(r, s));
    }
    for (int s = 0; s < kSensorCount; ++s) {
      out << ' ' << io::format_double(unit.sensors(r, s));
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace trendrul::cmapss

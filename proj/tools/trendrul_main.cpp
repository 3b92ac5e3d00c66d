#include <CLI11.hpp>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>

#include "trendrul/errors.hpp"
#include "trendrul/pipeline.hpp"

namespace {

int exit_code_for(const trendrul::Error& e) {
  const std::string& code = e.code();
  if (code == "PipelineOrderError") return 3;
  if (code == "GradientBlowup" || code == "NotDecomposable" ||
      code == "InvalidSigma" || code == "EnvelopeUnderdetermined") {
    return 4;
  }
  return 2;
}

int fail(const std::string& code, const std::string& message) {
  nlohmann::json err;
  err["error"] = code;
  err["message"] = message;
  std::cerr << err.dump() << std::endl;
  return code == "PipelineOrderError" ? 3 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trendrul: CEEMD trend features and LSTM RUL prediction"};
  app.set_version_flag("--version", trendrul::pipeline::tool_version());

  std::string command;
  app.add_option("command", command, "pipeline stage to run")
      ->required()
      ->check(CLI::IsMember({"decompose", "features", "train", "predict",
                             "evaluate", "compare-features"}));
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file (flat keys)");
  std::optional<std::uint64_t> seed;
  app.add_option("--seed", seed, "run seed override");
  std::optional<std::string> out_dir;
  app.add_option("--out", out_dir, "output directory override");
  std::optional<std::string> subset;
  app.add_option("--subset", subset, "C-MAPSS subset override (FD001..FD004)");
  std::optional<int> trend_level;
  app.add_option("--trend-level", trend_level, "trend feature level v");
  std::optional<int> stride;
  app.add_option("--stride", stride, "augmentation stride override");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("ConfigError", e.what());
  }

  try {
    trendrul::pipeline::RunConfig cfg;
    if (!config_path.empty()) {
      cfg = trendrul::pipeline::load_config(config_path);
    }
    if (seed) cfg.seed = *seed;
    if (out_dir) cfg.out_dir = *out_dir;
    if (subset) cfg.subset = *subset;
    if (trend_level) cfg.trend_level = *trend_level;
    if (stride) cfg.stride = *stride;

    trendrul::pipeline::run(command, cfg);
    return 0;
  } catch (const trendrul::Error& e) {
    nlohmann::json err;
    err["error"] = e.code();
    err["message"] = e.what();
    std::cerr << err.dump() << std::endl;
    return exit_code_for(e);
  } catch (const std::exception& e) {
    return fail("InternalError", e.what());
  }
}

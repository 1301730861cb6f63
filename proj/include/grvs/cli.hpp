#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "grvs/model.hpp"
#include "grvs/pipeline.hpp"
#include "grvs/scenes.hpp"

namespace grvs {

/// Exit codes shared by every subcommand.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitIo = 3,
  kExitNumerical = 4,
};

/// Flat key=value configuration with dotted namespaces (model.C=16,
/// train.lr=0.001, scene.frames=81, ...). Every key has a typed default;
/// setting an unknown key or a value of the wrong type is a ConfigError.
/// List values are comma separated.
class CliConfig {
 public:
  CliConfig();

  void set(const std::string& key, const std::string& value);
  /// Lines of key=value; blank lines and lines starting with '#' are skipped.
  void load_file(const std::filesystem::path& path);
  /// "key=value" as given on the command line.
  void apply_override(const std::string& assignment);

  bool contains(const std::string& key) const;
  std::string get(const std::string& key) const;

  ModelConfig model() const;
  TrainConfig train() const;
  SceneConfig scene() const;
  EvalConfig eval() const;

  /// Sorted key=value lines.
  std::string dump() const;

 private:
  nlohmann::json section(const std::string& prefix) const;
  nlohmann::json values_;  // flat: dotted key -> typed value
};

/// Entry point behind the grvs executable; argv[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Throws ConfigError when `report` does not follow the evaluation report schema.
void validate_eval_report(const nlohmann::json& report);

}  // namespace grvs

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "liboost/parallel.hpp"
#include "liboost/pipeline.hpp"

namespace fs = std::filesystem;
using namespace liboost;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kData = 3, kNumeric = 4 };

int report_error(const char* kind, const std::exception& e, int code) {
  std::cerr << "liboost: " << kind << ": " << e.what() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Translation-invariance boosted transfer attacks at desk scale"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  auto common = [&](CLI::App* cmd) {
    cmd->add_option("-c,--config", config_path, "Run config (JSON)")->required();
    cmd->add_option("--set", overrides, "Override a config key: section.key=value");
  };

  auto* train = app.add_subcommand("train", "Train every model of the config");
  common(train);

  std::string attack_name;
  std::string surrogate_path;
  auto* attack = app.add_subcommand("attack", "Generate a perturbation archive");
  common(attack);
  attack->add_option("--attack", attack_name, "Attack name")->required();
  attack->add_option("--surrogate", surrogate_path, "Surrogate checkpoint (default: config)");

  std::vector<std::string> archives;
  auto* eval_transfer = app.add_subcommand("eval-transfer", "Transfer ASR of archives");
  common(eval_transfer);
  eval_transfer->add_option("--archive", archives, "LIPD archive (repeatable)")->required();

  auto* eval_invariance =
      app.add_subcommand("eval-invariance", "Local invariance and its correlation with ASR");
  common(eval_invariance);
  eval_invariance->add_option("--archive", archives, "LIPD archive (repeatable)")->required();

  std::string param;
  std::vector<long> values;
  auto* sweep = app.add_subcommand("sweep", "Run one attack over several k or N");
  common(sweep);
  sweep->add_option("--attack", attack_name, "Attack name")->required();
  sweep->add_option("--param", param, "k or N")->required()->check(CLI::IsMember({"k", "N"}));
  sweep->add_option("--values", values, "Values, comma separated")->required()->delimiter(',');

  auto* report = app.add_subcommand("report", "Attack, evaluate and summarise");
  common(report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    const RunConfig cfg = load_config(config_path, overrides);
    const std::size_t workers = worker_count();
    std::vector<fs::path> paths(archives.begin(), archives.end());
    if (*train) {
      cmd_train(cfg, std::cout, workers);
    } else if (*attack) {
      std::optional<fs::path> surrogate;
      if (!surrogate_path.empty()) surrogate = surrogate_path;
      cmd_attack(cfg, attack_name, std::cout, workers, surrogate);
    } else if (*eval_transfer) {
      cmd_eval_transfer(cfg, paths, std::cout);
    } else if (*eval_invariance) {
      cmd_eval_invariance(cfg, paths, std::cout, workers);
    } else if (*sweep) {
      cmd_sweep(cfg, attack_name, param, values, std::cout, workers);
    } else if (*report) {
      cmd_report(cfg, std::cout, workers);
    }
  } catch (const ConfigError& e) {
    return report_error("config error", e, kConfig);
  } catch (const FormatError& e) {
    return report_error("data error", e, kData);
  } catch (const DataError& e) {
    return report_error("data error", e, kData);
  } catch (const ShapeError& e) {
    return report_error("data error", e, kData);
  } catch (const NumericError& e) {
    return report_error("numeric failure", e, kNumeric);
  } catch (const std::exception& e) {
    return report_error("error", e, kFailure);
  }
  return kOk;
}

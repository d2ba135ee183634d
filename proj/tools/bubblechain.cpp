// bubblechain: run, validate or gate-count a scenario config.
//
// Exit codes: 0 success, 2 config error, 3 numeric guard, 1 anything else.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "bubblechain/scenario.hpp"

namespace bc = bubblechain;

namespace {

int guarded(const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const bc::TooLarge& e) {
    std::cerr << "numeric guard: " << e.what() << '\n';
    return 3;
  } catch (const bc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const bc::InvalidBasisState& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const bc::InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bubble-chain lattice gauge theory simulator and gate compiler"};
  app.require_subcommand(1);
  int jobs = 0;
  std::string output;
  app.add_option("--jobs,-j", jobs, "worker threads for scans (default: scan size capped by hardware)");

  std::string run_cfg, validate_cfg, count_cfg;
  auto* run = app.add_subcommand("run", "run the scenario described by a config file");
  run->add_option("config", run_cfg, "scenario config (JSON)")->required();
  run->add_option("--output-dir,-o", output, "override output_dir from the config");
  auto* validate = app.add_subcommand("validate", "check a config without running it");
  validate->add_option("config", validate_cfg, "scenario config (JSON)")->required();
  auto* count = app.add_subcommand("gatecount", "compile the Trotter circuit and report gate counts");
  count->add_option("config", count_cfg, "scenario config (JSON)")->required();
  count->add_option("--output-dir,-o", output, "override output_dir from the config");

  CLI11_PARSE(app, argc, argv);

  const std::optional<std::string> out = output.empty() ? std::nullopt : std::optional<std::string>(output);

  if (*run) {
    return guarded([&] {
      const auto cfg = bc::load_config(run_cfg);
      const auto r = bc::run_scenario(cfg, jobs, out);
      for (const auto& f : r.files) std::cout << f << '\n';
    });
  }
  if (*validate) {
    return guarded([&] {
      const auto cfg = bc::load_config(validate_cfg);
      cfg.params.reg();  // dimension guard
      if (!cfg.initial_preset.empty() || !cfg.initial_terms.empty()) bc::resolve_initial_state(cfg, cfg.params);
      std::cout << "ok: " << cfg.scenario << '\n';
    });
  }
  return guarded([&] {
    auto cfg = bc::load_config(count_cfg);
    cfg.scenario = "gatecount";
    const auto r = bc::run_scenario(cfg, jobs, out);
    std::cout << r.summary.dump(2) << '\n';
  });
}

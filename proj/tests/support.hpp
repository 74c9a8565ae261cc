#pragma once

#include <memory>
#include <optional>
#include <string>

#include "k4i/orchestrator/scenario.hpp"
#include "k4i/orchestrator/testbed.hpp"

namespace k4i::test {

inline std::string data_path(const std::string& rel) { return std::string(K4I_DATA_DIR) + "/" + rel; }

/// Loads a bundled scenario (and its game, if any) in fast mode.
inline std::unique_ptr<orchestrator::Testbed> load_testbed(const std::string& scenario, bool with_game = true,
                                                           std::optional<std::uint64_t> seed = std::nullopt) {
  auto cfg = orchestrator::load_scenario_file(data_path("scenarios/" + scenario));
  cfg.mode = orchestrator::ClockMode::fast;
  orchestrator::InstantiateOptions opts;
  opts.seed = seed;
  if (with_game && cfg.game) opts.game = orchestrator::load_game_for(cfg, orchestrator::read_text_file(*cfg.game));
  return std::make_unique<orchestrator::Testbed>(std::move(cfg), std::move(opts));
}

}  // namespace k4i::test

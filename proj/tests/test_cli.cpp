#include <doctest.h>

#include "live.hpp"

TEST_CASE("REST and CLI contract against live testbeds") {
  const auto checks = k4i::test::run_contract_suite(K4I_BINARY, K4I_DATA_DIR);
  CHECK(checks.size() > 40);
  for (const auto& c : checks) CHECK_MESSAGE(c.ok, c.name << ": " << c.detail);
}

TEST_CASE("scale run reports every PLC") {
  const auto r = k4i::test::run_command(
      {K4I_BINARY, "run", std::string(K4I_DATA_DIR) + "/scenarios/scale-148.json", "--fast", "60000"});
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("148 PLCs stepped") != std::string::npos);
  CHECK(r.output.find(" 0 missed") != std::string::npos);
}

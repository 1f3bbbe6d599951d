// Copyright 2026 The tollane Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end; talks to the simulator through the C interface only.

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "tollane/tollane.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitRuntime = 3;

int exit_code(int status) {
  switch (status) {
    case TOLLANE_OK:
      return kExitOk;
    case TOLLANE_E_PARSE:
    case TOLLANE_E_VALIDATION:
    case TOLLANE_E_ARGUMENT:
      return kExitInput;
    default:
      return kExitRuntime;
  }
}

int report_error(const char* verb, int status) {
  std::fprintf(stderr, "tollane %s: %s\n", verb, tollane_last_error());
  return exit_code(status);
}

struct Scenario {
  tollane_scenario* handle = nullptr;
  ~Scenario() { tollane_scenario_free(handle); }
};

std::string resolve_out(tollane_scenario* sc, const std::string& flag, const char* fallback) {
  if (!flag.empty()) return flag;
  char* configured = nullptr;
  if (tollane_scenario_output(sc, &configured) == TOLLANE_OK && configured && *configured) {
    std::string s = configured;
    tollane_string_free(configured);
    return s;
  }
  tollane_string_free(configured);
  return fallback;
}

void print_owned(char* text) {
  if (text) std::fputs(text, stdout);
  tollane_string_free(text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Macroscopic freeway simulator with toll-lane control and pricing"};
  app.set_version_flag("--version", std::string(tollane_version()));
  app.require_subcommand(1);

  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;

  auto add_common = [&](CLI::App* sub, bool with_out, bool with_seed) {
    sub->add_option("--config,-c", config, "Scenario JSON file")->required();
    if (with_out) sub->add_option("--out,-o", out, "Output directory");
    if (with_seed) sub->add_option("--seed", seed, "Override the configured random seed");
  };
  CLI::App* run = app.add_subcommand("run", "Simulate a scenario and write its artifacts");
  add_common(run, true, true);
  CLI::App* analyze = app.add_subcommand("analyze", "Report feasibility and equilibria");
  add_common(analyze, true, false);
  CLI::App* compare =
      app.add_subcommand("compare", "Compare fixed-share, all general-purpose and controlled runs");
  add_common(compare, true, true);
  CLI::App* validate = app.add_subcommand("validate", "Check a scenario without running it");
  add_common(validate, false, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }

  Scenario sc;
  const char* verb = app.get_subcommands().front()->get_name().c_str();
  int status = tollane_scenario_load(config.c_str(), &sc.handle);
  if (status == TOLLANE_E_IO) {
    // an unreadable config is bad input, not a runtime failure
    report_error(verb, status);
    return kExitInput;
  }
  if (status != TOLLANE_OK) return report_error(verb, status);

  const std::uint64_t seed_value = seed.value_or(0);
  const int has_seed = seed.has_value() ? 1 : 0;

  if (*validate) {
    int links = 0;
    long horizon = 0;
    tollane_scenario_links(sc.handle, &links);
    tollane_scenario_horizon(sc.handle, &horizon);
    std::printf("ok: %d mainline links, %ld steps\n", links, horizon);
    return kExitOk;
  }
  if (*run) {
    const std::string dir = resolve_out(sc.handle, out, "out");
    status = tollane_run(sc.handle, dir.c_str(), seed_value, has_seed);
    if (status != TOLLANE_OK) return report_error(verb, status);
    std::printf("wrote %s\n", dir.c_str());
    return kExitOk;
  }
  if (*analyze) {
    char* report = nullptr;
    status = tollane_analyze(sc.handle, out.empty() ? nullptr : out.c_str(), &report);
    if (status != TOLLANE_OK) return report_error(verb, status);
    print_owned(report);
    return kExitOk;
  }
  char* report = nullptr;
  status = tollane_compare(sc.handle, out.empty() ? nullptr : out.c_str(), seed_value, has_seed,
                           &report);
  if (status != TOLLANE_OK) return report_error(verb, status);
  print_owned(report);
  return kExitOk;
}

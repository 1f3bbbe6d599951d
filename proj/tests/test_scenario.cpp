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

#include <algorithm>
#include <filesystem>
#include <functional>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "scenario_checks.hpp"
#include "tollane/errors.hpp"
#include "tollane/scenario.hpp"

using namespace tollane;
using testsupport::congested;
using testsupport::congested_links;
using doctest::Approx;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = TOLLANE_SCENARIO_DIR;

std::string minimal(const std::string& extra = "") {
  return R"({
    "timestep_s": 12, "horizon_steps": 40,
    "entrance": {"length_miles": 0.2, "lanes": 2, "freeflow_mph": 60, "capacity_vphpl": 2000},
    "links": [{"count": 4, "length_miles": 0.2, "lanes": 2, "freeflow_mph": 60,
               "congestion_mph": 20, "capacity_vphpl": 2000, "jam_vpmpl": 200}],
    "demand": {"entrance_vph": 2000})" +
         extra + "}";
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::Io;
}

std::string with(std::string text, const std::string& from, const std::string& to) {
  const auto at = text.find(from);
  REQUIRE(at != std::string::npos);
  return text.replace(at, from.size(), to);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("tollane_test_" + name);
  fs::remove_all(p);
  return p;
}

Scenario bundled(const std::string& name) { return prepare(load_config(kScenarios / name)); }

}  // namespace

TEST_SUITE("scenario") {
  TEST_CASE("minimal config takes defaults") {
    const auto c = parse_config(minimal());
    CHECK(c.name == "scenario");
    CHECK(c.links.size() == 4);
    CHECK_FALSE(c.lane_split.has_value());
    CHECK_FALSE(c.controller);
    CHECK(c.pricer.kind == PricerConfig::Kind::None);
    const auto s = prepare(c);
    CHECK(s.geometry.mainline_count() == 3);
    CHECK_FALSE(s.dual.has_value());
    CHECK(s.demand.entrance.at(0) == Approx(2000.0 * 12.0 / 3600.0));
  }

  TEST_CASE("malformed configs are parse errors") {
    CHECK(code_of([] { parse_config("{"); }) == ErrorCode::Parse);
    CHECK(code_of([] { parse_config(minimal(R"(, "bogus": 1)")); }) == ErrorCode::Parse);
    CHECK(code_of([] { parse_config(minimal(R"(, "seed": "x")")); }) == ErrorCode::Parse);
    CHECK(code_of([] { load_config("/nonexistent/tollane.json"); }) == ErrorCode::Io);
  }

  TEST_CASE("out-of-range values are validation errors") {
    const auto bad = with(minimal(), R"("entrance_vph": 2000)", R"("entrance_vph": -5)");
    CHECK(code_of([&] { parse_config(bad); }) == ErrorCode::Validation);
    CHECK(code_of([] { prepare(parse_config(minimal(R"(, "controller": true)"))); }) ==
          ErrorCode::Validation);
  }

  TEST_CASE("ramp demand needs an on-ramp") {
    const auto cfg = with(minimal(), R"("entrance_vph": 2000)",
                          R"("entrance_vph": 2000, "ramps_vph": {"2": 100})");
    CHECK(code_of([&] { prepare(parse_config(cfg)); }) == ErrorCode::Validation);
  }

  TEST_CASE("CFL violations report the admissible step") {
    const auto cfg = with(minimal(), R"("timestep_s": 12)", R"("timestep_s": 30)");
    try {
      prepare(parse_config(cfg));
      FAIL("expected a validation error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Validation);
      CHECK(std::string(e.what()).find("12 s") != std::string::npos);
    }
  }

  TEST_CASE("every bundled scenario validates") {
    int seen = 0;
    for (const auto& entry : fs::directory_iterator(kScenarios)) {
      if (entry.path().extension() != ".json") continue;
      CAPTURE(entry.path().string());
      CHECK_NOTHROW(prepare(load_config(entry.path())));
      ++seen;
    }
    CHECK(seen >= 5);
  }

  TEST_CASE("outputs are byte-identical across runs") {
    const auto s = bundled("scenario_2.json");
    const auto a = scratch("repeat_a");
    const auto b = scratch("repeat_b");
    write_outputs(s, run_scenario(s), a);
    write_outputs(s, run_scenario(s), b);
    for (const char* f : {"contours.csv", "flows.csv", "directives.csv", "metrics.json"}) {
      CAPTURE(f);
      CHECK(fs::exists(a / f));
      CHECK(slurp(a / f) == slurp(b / f));
    }
    const auto m = nlohmann::json::parse(slurp(a / "metrics.json"));
    CHECK(m.contains("total"));
    CHECK(m["horizon_steps"] == 450);
    fs::remove_all(a);
    fs::remove_all(b);
  }

  TEST_CASE("seeded pricers are reproducible and seeds matter") {
    auto c = load_config(kScenarios / "scenario_2.json");
    c.horizon_steps = 120;
    c.pricer.kind = PricerConfig::Kind::Auction;
    c.pricer.belief = {{0.0, 0.0}, {40.0, 1.0}};
    c.pricer.truth = c.pricer.belief;
    const auto s = prepare(c);
    RunOptions o;
    o.seed = 3;
    const auto r1 = run_scenario(s, o);
    const auto r2 = run_scenario(s, o);
    CHECK(metrics_json(s, r1) == metrics_json(s, r2));
    o.seed = 4;
    const auto r3 = run_scenario(s, o);
    CHECK(metrics_json(s, r1) != metrics_json(s, r3));
  }

  TEST_CASE("analysis of a strictly feasible corridor") {
    const auto s = prepare(parse_config(minimal()));
    const auto r = analyze(s);
    CHECK(r.feasibility == FeasibilityClass::StrictlyFeasible);
    CHECK(analysis_text(s, r).find("unique equilibrium") != std::string::npos);
    const auto j = nlohmann::json::parse(analysis_json(s, r));
    CHECK(j.is_object());
  }

  TEST_CASE("analysis of an infeasible corridor reports queue growth") {
    auto cfg = with(minimal(), R"("entrance_vph": 2000)", R"("entrance_vph": 3000)");
    cfg = with(cfg, R"("jam_vpmpl": 200}])",
               R"("jam_vpmpl": 200}, {"length_miles": 0.2, "lanes": 2, "freeflow_mph": 60,
               "congestion_mph": 20, "capacity_vphpl": 1000, "jam_vpmpl": 200}])");
    const auto s = prepare(parse_config(cfg));
    const auto r = analyze(s);
    CHECK(r.feasibility == FeasibilityClass::Infeasible);
    CHECK(analysis_text(s, r).find("queue") != std::string::npos);
  }

  TEST_CASE("analysis requires constant demand") {
    CHECK(code_of([] { analyze(bundled("scenario_2.json")); }) == ErrorCode::Validation);
  }

  TEST_CASE("zero demand compare is all zeros") {
    auto c = load_config(kScenarios / "compare_corridor.json");
    c.entrance_demand_vph = StepSeries(0.0);
    c.horizon_steps = 50;
    const auto r = compare(prepare(c));
    for (const auto* run : {&r.base, &r.all_gp, &r.hot}) {
      CHECK(run->metrics.total.vmt == 0.0);
      CHECK(run->metrics.total.delay == 0.0);
    }
    CHECK(compare_table(r).find("delay") != std::string::npos);
  }

  TEST_CASE("scenario 1a: toll lane stays congested downstream") {
    const auto s = bundled("scenario_1a.json");
    const auto r = run_scenario(s);
    CHECK(congested_links(s, r.trajectory.states.back(), 0) == std::vector<int>{7, 8, 9, 10});
  }

  TEST_CASE("scenario 1b: toll lane clears") {
    const auto s = bundled("scenario_1b.json");
    const auto r = run_scenario(s);
    CHECK(congested(s, r.trajectory.states.front(), 0, 10));
    CHECK(testsupport::clear_step(s, r.trajectory, 0) == 44);
  }

  TEST_CASE("scenario 2: toll lane recovers before the general lanes") {
    const auto s = bundled("scenario_2.json");
    const auto r = run_scenario(s);
    CHECK(testsupport::ever_congested(s, r.trajectory, 0));
    CHECK(testsupport::clear_step(s, r.trajectory, 0) == 248);
    CHECK(testsupport::clear_step(s, r.trajectory, 1) > 248);
  }

  TEST_CASE("scenario 3: both entrances redistribute") {
    const auto s = bundled("scenario_3.json");
    const auto r = run_scenario(s);
    const auto ranges = testsupport::share_ranges(r.trajectory);
    REQUIRE(ranges.size() == 2);
    CHECK(ranges.at(1).first == Approx(1.0 / 3.0));
    CHECK(ranges.at(1).second == Approx(0.5));
    CHECK(ranges.at(9).first == Approx(0.0));
    CHECK(ranges.at(9).second == Approx(0.5));
    CHECK(testsupport::clear_step(s, r.trajectory, 0) == 73);
  }
}

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

#pragma once

// Scenario configuration (JSON), execution and artifact emission.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tollane/control.hpp"
#include "tollane/core.hpp"
#include "tollane/equilibrium.hpp"
#include "tollane/pricing.hpp"
#include "tollane/sim.hpp"

namespace tollane {

struct PricerConfig {
  enum class Kind { None, Vot, Auction };
  Kind kind = Kind::None;
  std::vector<std::pair<double, double>> belief;  // (price per hour, CDF) knots
  std::vector<std::pair<double, double>> truth;   // defaults to belief
  double smoothing = kDefaultSmoothing;
  bool calibrate = false;
  LaneMode mode = LaneMode::Etl;
  std::size_t samples = 0;
  AuctionVariant variant = AuctionVariant::Standard;
  bool first_rejected_price = false;
  std::size_t bidders = 100;
};

struct InitialConfig {
  enum class Kind { Empty, Equilibrium, Explicit };
  Kind kind = Kind::Empty;
  int congested_from = 0;  // equilibrium: first congested link
  // explicit: vehicles per lane group (one group in single mode), links 1..K+1
  std::vector<std::vector<double>> vehicles;
  std::vector<double> ramp_queues;  // links 1..K
  double entrance_queue = 0.0;
};

struct ScenarioConfig {
  std::string name = "scenario";
  double timestep_s = 0.0;
  long horizon_steps = 0;
  PriorityMode priority_mode = PriorityMode::Capacity;
  RawLinkSpec entrance;
  std::vector<RawLinkSpec> links;  // 1..K+1, last is the exit
  std::vector<RawRampSpec> ramps;  // 1..K
  std::optional<std::pair<int, int>> lane_split;  // toll, general lanes
  StepSeries entrance_demand_vph;
  std::vector<std::pair<int, StepSeries>> ramp_demand_vph;
  InitialConfig initial;
  bool controller = false;
  PricerConfig pricer;
  double base_toll_share = 0.0;  // fixed toll-lane share of the "base" compare run
  std::uint64_t seed = 0;
  std::string output;  // default output directory; may be empty
};

/// Throws Error(Parse) for malformed JSON, unknown keys or wrong types, and
/// Error(Validation) for values out of range.
ScenarioConfig parse_config(const std::string& json_text, const std::string& origin = "<string>");
ScenarioConfig load_config(const std::filesystem::path& path);

/// A validated scenario ready to run.
struct Scenario {
  ScenarioConfig config;
  FreewayGeometry geometry;
  std::optional<DualGeometry> dual;
  DemandProfile demand;  // vehicles per step
};

/// Builds and validates the geometry; throws Error(Validation) listing every
/// violation (CFL violations cite the largest admissible time step).
Scenario prepare(const ScenarioConfig& config);

TrafficState initial_state(const Scenario& s);

struct RunOptions {
  std::optional<bool> controller;  // overrides the config
  bool use_pricer = true;
  std::optional<double> fixed_toll_share;  // replaces the controller
  bool merge_lanes = false;                // run the single lane-group model
  std::optional<std::uint64_t> seed;
};

struct RunResult {
  std::string label;
  bool dual = false;
  Trajectory trajectory;
  MetricsReport metrics;
  std::optional<TollTargets> targets;
  std::optional<VotDistribution> calibrated;
};

/// Incremental run of a scenario; `s` must outlive the object.
class ScenarioRun {
 public:
  explicit ScenarioRun(const Scenario& s, const RunOptions& options = {});
  ScenarioRun(const ScenarioRun&) = delete;
  ScenarioRun& operator=(const ScenarioRun&) = delete;

  void advance(long steps = 1);
  long steps_done() const;
  bool dual() const { return dual_; }
  const Simulation& simulation() const { return *sim_; }
  /// Metrics of the trajectory so far.
  MetricsReport current_metrics() const;
  /// Moves the trajectory into a result; the object must not be advanced afterwards.
  RunResult finish();

 private:
  const Scenario* scenario_;
  bool dual_ = false;
  std::string label_;
  std::unique_ptr<SplitPolicy> policy_;
  std::unique_ptr<Pricer> pricer_;
  VotPricer* vot_ = nullptr;
  std::optional<TollTargets> targets_;
  std::unique_ptr<Simulation> sim_;
};

RunResult run_scenario(const Scenario& s, const RunOptions& options = {});

/// Writes contours.csv, flows.csv, directives.csv and metrics.json (plus
/// calibration.csv for a calibrating VoT pricer) into `dir`.
void write_outputs(const Scenario& s, const RunResult& r, const std::filesystem::path& dir);

std::string metrics_json(const Scenario& s, const RunResult& r);

/// Equilibrium analysis of the single lane-group freeway at the demand of
/// step 0; throws Error(Validation) if the demand is not constant.
EquilibriumReport analyze(const Scenario& s);
std::string analysis_text(const Scenario& s, const EquilibriumReport& r);
std::string analysis_json(const Scenario& s, const EquilibriumReport& r);

struct CompareResult {
  RunResult base;     // fixed exogenous toll-lane share
  RunResult all_gp;   // lanes merged
  RunResult hot;      // controller (and pricer, if configured)
};

/// Requires a lane split in the config.
CompareResult compare(const Scenario& s, std::optional<std::uint64_t> seed = std::nullopt);
std::string compare_table(const CompareResult& c);
void write_compare(const Scenario& s, const CompareResult& c, const std::filesystem::path& dir);

}  // namespace tollane

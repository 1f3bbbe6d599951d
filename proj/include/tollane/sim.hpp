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

// Time-stepping cell transmission model for a freeway chain, in either the
// single lane-group form or the toll / general-purpose split form.

#include <limits>
#include <utility>
#include <vector>

#include "tollane/core.hpp"

namespace tollane {

struct TrafficState {
  std::vector<std::vector<double>> vehicles;  // [group][link 0..K+1]; link 0 unused
  std::vector<double> ramp_queues;            // [link 0..K+1]
  double entrance_queue = 0.0;                // n_0
  long step = 0;

  int groups() const { return static_cast<int>(vehicles.size()); }
  double link_total(int link) const;
  /// Every vehicle on the freeway, on-ramps and in the entrance queue.
  double total() const;
};

TrafficState empty_state(const FreewayGeometry& g);
TrafficState empty_state(const DualGeometry& g);

/// Piecewise-constant series over step indices.
class StepSeries {
 public:
  StepSeries() = default;
  explicit StepSeries(double constant) { add(0, constant); }
  /// Value `value` applies from step `start` until the next breakpoint.
  void add(long start, double value);
  double at(long step) const;
  bool is_constant() const;
  bool empty() const { return points_.empty(); }
  const std::vector<std::pair<long, double>>& points() const { return points_; }

 private:
  std::vector<std::pair<long, double>> points_;
};

/// Entrance flow f_{-1}(t) and on-ramp demands d_i(t), vehicles per step.
struct DemandProfile {
  StepSeries entrance;
  std::vector<StepSeries> ramps;  // per link 0..K+1; empty series means zero

  double entrance_at(long step) const { return entrance.at(step); }
  double ramp_at(int link, long step) const;
  std::vector<double> ramps_at(int links, long step) const;
  bool is_constant() const;
};

/// Outflow demands, inflow supplies and on-ramp demands for one state.
struct LinkSignals {
  std::vector<std::vector<double>> sending;    // f^d [group][0..K+1]
  std::vector<std::vector<double>> receiving;  // f^s [group][0..K+1]
  std::vector<double> ramp_sending;            // r^d [0..K+1]
};

/// In single-group mode sending[0][0] is the entrance's outflow demand. In
/// lane-split mode the entrance appears as ramp_sending[1].
LinkSignals demands_supplies(const TrafficState& s, const FreewayGeometry& g);
LinkSignals demands_supplies(const TrafficState& s, const DualGeometry& g);

struct StepFlows {
  std::vector<std::vector<double>> mainline;  // f [group][0..K+1], link i -> i+1
  std::vector<std::vector<double>> ramp;      // r [group][0..K+1]
  std::vector<std::vector<double>> offramp;   // s [group][0..K+1]
  double entrance_inflow = 0.0;               // f_{-1}
  std::vector<double> ramp_demand;            // d [0..K+1]
  std::vector<double> toll_share;             // alpha^1 per link, NaN where unused

  double outflow(int group, int link) const;
};

struct StepResult {
  TrafficState state;
  StepFlows flows;
};

/// Priorities (p^f_{i-1}, p^r_i) at node i for the given signals.
std::pair<double, double> node_priorities(const FreewayGeometry& g, const LinkSignals& sig, int i);

StepResult step(const TrafficState& s, const FreewayGeometry& g, double entrance_demand,
                const std::vector<double>& ramp_demands);

/// `toll_shares[i]` is alpha^1 at entrance link i; NaN selects the lane share.
StepResult step(const TrafficState& s, const DualGeometry& g, double entrance_demand,
                const std::vector<double>& ramp_demands, const std::vector<double>& toll_shares);

/// Requested toll-lane shares per entrance link for the current state.
class SplitPolicy {
 public:
  virtual ~SplitPolicy() = default;
  virtual std::vector<double> toll_shares(const TrafficState& s, const DualGeometry& g) = 0;
};

/// Every entrance sends the same fixed share to the toll lane.
class FixedSplit : public SplitPolicy {
 public:
  explicit FixedSplit(double toll_share) : share_(toll_share) {}
  std::vector<double> toll_shares(const TrafficState& s, const DualGeometry& g) override;

 private:
  double share_;
};

struct PriceQuote {
  double toll_share = 0.0;  // realized alpha^1
  double toll = 0.0;        // charge per toll-lane vehicle
  double price_per_hour = 0.0;
};

/// Turns a requested split into a toll and the split travelers realize.
class Pricer {
 public:
  virtual ~Pricer() = default;
  virtual PriceQuote quote(int link, double requested_share, double ramp_demand,
                           const TrafficState& s, const DualGeometry& g) = 0;
  /// Called after the step with the realized toll and general entries.
  virtual void settle(int link, const PriceQuote& quote, double toll_entries,
                      double general_entries) {
    (void)link, (void)quote, (void)toll_entries, (void)general_entries;
  }
};

struct EntranceRecord {
  long step = 0;
  int link = 0;
  double requested_share = 0.0;
  double toll_share = 0.0;
  double toll = 0.0;
  double revenue = 0.0;
};

struct Trajectory {
  std::vector<TrafficState> states;  // horizon + 1 entries
  std::vector<StepFlows> flows;      // horizon entries
  std::vector<EntranceRecord> entrance_log;
  std::vector<double> group_shares;  // lane fraction per group
};

/// Incremental runner; run() below is a thin wrapper. The geometry and the
/// optional controller and pricer must outlive the simulation.
class Simulation {
 public:
  Simulation(const FreewayGeometry& g, DemandProfile demand, const TrafficState& initial);
  Simulation(const DualGeometry& g, DemandProfile demand, const TrafficState& initial,
             SplitPolicy* controller = nullptr, Pricer* pricer = nullptr);

  void advance(long steps = 1);
  const TrafficState& state() const { return traj_.states.back(); }
  const Trajectory& trajectory() const { return traj_; }
  Trajectory release() { return std::move(traj_); }
  bool dual() const { return dual_ != nullptr; }

 private:
  const FreewayGeometry* single_ = nullptr;
  const DualGeometry* dual_ = nullptr;
  DemandProfile demand_;
  SplitPolicy* controller_ = nullptr;
  Pricer* pricer_ = nullptr;
  Trajectory traj_;
};

Trajectory run(const FreewayGeometry& g, const DemandProfile& demand, long horizon,
               const TrafficState& initial);

/// The controller, if any, is consulted before every step; a pricer converts
/// each requested share into the share travelers actually take.
Trajectory run(const DualGeometry& g, const DemandProfile& demand, long horizon,
               const TrafficState& initial, SplitPolicy* controller = nullptr,
               Pricer* pricer = nullptr);

struct TravelMetrics {
  double vmt = 0.0;    // vehicle-miles
  double vht = 0.0;    // vehicle-hours
  double delay = 0.0;  // vehicle-hours
};

struct MetricsReport {
  TravelMetrics total;
  std::vector<TravelMetrics> groups;  // mainline links per lane group
  TravelMetrics queues;               // on-ramp and entrance queues
  // [group][t][k] for mainline links k+1 = 1..K, t = 0..horizon-1
  std::vector<std::vector<std::vector<double>>> density_vpmpl;
  std::vector<std::vector<std::vector<double>>> speed_mph;
};

/// Realized speed (mph) of a link holding `vehicles` that discharged
/// `outflow` vehicles (downstream + off-ramp) in one step, capped at the
/// free-flow speed. Empty links run at free-flow speed.
double realized_speed(double vehicles, double outflow, const LinkGeometry& link,
                      double timestep_hours);

/// Lanes carried by one group of link i.
double group_lanes(const Trajectory& t, const FreewayGeometry& g, int group, int link);

MetricsReport metrics(const Trajectory& traj, const FreewayGeometry& g);

/// Equivalent freeway without off-ramps: link quantities are scaled by
/// mu_i = prod_{j<i} 1/beta^f_j (outflow capacities by mu_{i+1}). Demands must
/// be scaled by `scale` as well; trajectories then satisfy n'_i = mu_i n_i.
struct OfframpFreeSystem {
  FreewayGeometry geometry;
  TrafficState state;
  std::vector<double> scale;  // mu_i per link 0..K+1
};

OfframpFreeSystem transform_remove_offramps(const FreewayGeometry& g, const TrafficState& s);

}  // namespace tollane

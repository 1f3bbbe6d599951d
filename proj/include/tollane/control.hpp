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

// Split-ratio feedback control for a freeway with a toll lane group: per
// entrance queue-growth minimization and the upstream sweep that keeps the
// toll lane at or below its maximum free-flow equilibrium.

#include <vector>

#include "tollane/core.hpp"
#include "tollane/sim.hpp"

namespace tollane {

/// Node quantities seen by one entrance.
struct EntranceSignals {
  double ramp_demand = 0.0;                  // r^d
  double ramp_priority = 0.0;                // p^r
  double upstream_priority[2] = {0.0, 0.0};  // p^{xi,f}_{i-1}
  double upstream_demand[2] = {0.0, 0.0};    // f^{xi,d}_{i-1}
  double downstream_supply[2] = {0.0, 0.0};  // f^{xi,s}_i
};

EntranceSignals entrance_signals(const TrafficState& s, const DualGeometry& g, int link);

/// Reduction factor lambda^xi(alpha) of one lane group; 1 at alpha = 0.
double group_reduction(const EntranceSignals& e, int group, double share);

/// Right limit of lambda^xi at `share`.
double group_reduction_right(const EntranceSignals& e, int group, double share);

/// lambda(alpha, 1 - alpha).
double entrance_reduction(const EntranceSignals& e, double toll_share);

struct GrowthBounds {
  double optimal_min = 0.0;  // min A^1
  double optimal_max = 1.0;  // max A^1
  double best_reduction = 1.0;  // lambda*
  double threshold[2] = {1.0, 1.0};  // alpha-bar^xi
  double toll_flow_min = 0.0;  // r^{1,min}
  double toll_flow_max = 0.0;  // r^{1,max}
};

/// Toll-lane entrance flow r^1 = lambda(alpha, 1 - alpha) alpha r^d.
double toll_entrance_flow(const EntranceSignals& e, double toll_share);

/// Interior roots are bracketed by bisection to this width.
inline constexpr double kRootTolerance = 1e-12;

GrowthBounds growth_bounds(const EntranceSignals& e);
GrowthBounds growth_bounds(const TrafficState& s, const DualGeometry& g, int link);

/// Avoids shifting entrance flow into the toll lane beyond its lane share
/// when both groups can take everything.
GrowthBounds freeflow_correction(const GrowthBounds& b, int toll_lanes, int general_lanes,
                                 double ramp_demand);

struct TollTargets {
  std::vector<double> maintainable_flow;     // f^{1,*} [0..K+1]
  std::vector<double> maintainable_density;  // n^{1,*}
  std::vector<double> equilibrium_flow;      // f^{1,e}
  std::vector<double> equilibrium_density;   // n^{1,e}
  std::vector<double> equilibrium_ramp;      // r^{1,e}, nonzero only at entrances
  std::vector<int> entrances;                // i_1 = 1 < ... < i_M
  std::vector<double> segment_budget;        // N^{1,e}(i_m, i_{m+1}), m = 1..M
};

/// Throws Error(InvalidTargets) if an equilibrium entrance flow is negative.
TollTargets toll_targets(const DualGeometry& g);

struct ControlDirective {
  int link = 0;
  double toll_share = 0.0;     // alpha^1
  double general_share = 1.0;  // alpha^2
  double toll_flow = 0.0;      // chosen r^1
  GrowthBounds bounds;         // after correction and clipping
  double excess = 0.0;         // delta-n when this entrance was visited
  double gamma = 1.0;          // gamma_m applied to this entrance's segment
};

std::vector<ControlDirective> compute_directives(const TrafficState& s, const DualGeometry& g,
                                                 const TollTargets& targets);

/// SplitPolicy driven by compute_directives; keeps the last directives.
class TollLaneController : public SplitPolicy {
 public:
  explicit TollLaneController(const DualGeometry& g);
  std::vector<double> toll_shares(const TrafficState& s, const DualGeometry& g) override;
  const TollTargets& targets() const { return targets_; }
  const std::vector<ControlDirective>& last() const { return last_; }

 private:
  TollTargets targets_;
  std::vector<ControlDirective> last_;
};

}  // namespace tollane

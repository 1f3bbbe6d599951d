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

// Equilibria of the single lane-group freeway under constant incoming flows:
// maximum flows, the unique equilibrium flows, feasibility, and the structure
// of the set of equilibrium density vectors.

#include <string>
#include <vector>

#include "tollane/core.hpp"
#include "tollane/sim.hpp"

namespace tollane {

/// Tolerance for equalities in the bottleneck and forced-set tests and for
/// density membership.
inline constexpr double kEquilibriumTolerance = 1e-9;

struct MaxFlows {
  std::vector<double> mainline;  // f-bar [0..K+1]
  std::vector<double> ramp;      // r-bar [0..K+1]; entries 0 and K+1 are zero
};

MaxFlows max_flows(const FreewayGeometry& g, double entrance_flow, const std::vector<double>& ramp_demands);

enum class NodeCase { Upstream = 1, Ramp = 2, Proportional = 3 };

struct EquilibriumFlows {
  std::vector<double> mainline;  // f [0..K+1]
  std::vector<double> ramp;      // r [0..K+1]
  std::vector<NodeCase> cases;   // per node 1..K+1 (index 0 unused)
};

/// Backward recursion from f_{K+1} = f-bar_{K+1}. Uses the geometry's stored
/// (capacity-proportional or explicit) priorities.
EquilibriumFlows equilibrium_flows(const FreewayGeometry& g, const MaxFlows& mf);

enum class FeasibilityClass { StrictlyFeasible, Feasible, Infeasible };

const char* to_string(FeasibilityClass c);

/// Compares f_i(f-bar_0, r-bar) against F^d_i; equality is judged within
/// kEquilibriumTolerance.
FeasibilityClass classify(const FreewayGeometry& g, double entrance_flow,
                          const std::vector<double>& ramp_demands);

/// Links first..last (i_{m-1}+1 .. i_m). Links up to `uncongested_end` sit at
/// n^u and links from `congested_start` on sit at n^c; when the two are not
/// adjacent, exactly one link h strictly between them is free within
/// [n^u_h, n^c_h].
struct DensitySegment {
  int first = 0;
  int last = 0;
  int uncongested_end = 0;   // i^u_m
  int congested_start = 0;   // i^c_m

  bool single() const { return uncongested_end + 1 == congested_start; }
  int family_begin() const { return uncongested_end + 1; }
  int family_end() const { return congested_start - 1; }
};

struct DensitySetStructure {
  std::vector<int> bottlenecks;          // I
  std::vector<DensitySegment> segments;  // I_1..I_{M+1}; the last is all n^u
  std::vector<double> uncongested;       // n^u [0..K+1]
  std::vector<double> congested;         // n^c [0..K+1]
  std::vector<int> forced_uncongested;   // U
  std::vector<int> forced_congested;     // C
  std::vector<int> near_degenerate;      // links whose classification sat within 1e3 x tolerance

  bool single_vector() const;
};

DensitySetStructure density_set(const FreewayGeometry& g, const MaxFlows& mf,
                                const EquilibriumFlows& eq);

/// One member of E. For each segment, `free_link[m]` picks h (ignored for
/// single-vector segments) and `position[m]` in [0, 1] places n_h between
/// n^u_h and n^c_h.
std::vector<double> density_member(const DensitySetStructure& e, const std::vector<int>& free_link,
                                   const std::vector<double>& position);

/// Membership of n (indices 0..K+1, entry 0 ignored) in E.
bool contains(const DensitySetStructure& e, const std::vector<double>& n,
              double tolerance = kEquilibriumTolerance);

bool is_equilibrium(const FreewayGeometry& g, const MaxFlows& mf, const EquilibriumFlows& eq,
                    const std::vector<double>& n);

/// State holding densities `n` and the smallest queues whose demands equal
/// the maximum flows: q_i = r-bar_i / v^r_i and n_0 = f-bar_0 / v_0.
TrafficState equilibrium_state(const FreewayGeometry& g, const MaxFlows& mf,
                               const std::vector<double>& n);

struct EquilibriumReport {
  MaxFlows max;
  EquilibriumFlows flows;
  FeasibilityClass feasibility = FeasibilityClass::StrictlyFeasible;
  DensitySetStructure densities;
};

EquilibriumReport analyze_equilibrium(const FreewayGeometry& g, double entrance_flow,
                                      const std::vector<double>& ramp_demands);

/// Plain-text rendering of segments, bottlenecks and families.
std::string render(const EquilibriumReport& r);

}  // namespace tollane

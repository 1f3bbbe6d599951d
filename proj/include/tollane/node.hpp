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

// Node flow solvers: the general m-input / n-output node, the two-input
// freeway merge, and the merge into a lane-split (toll / general) link pair.

#include <vector>

namespace tollane {

/// Absolute tolerance used for all flow comparisons (vehicles per step).
inline constexpr double kFlowTolerance = 1e-12;

struct NodeProblem {
  std::vector<double> demands;     // f^d_i, one per input
  std::vector<double> supplies;    // f^s_j, one per output
  std::vector<double> splits;      // beta_ij, row-major inputs x outputs, rows sum to 1
  std::vector<double> priorities;  // p_i

  std::size_t inputs() const { return demands.size(); }
  std::size_t outputs() const { return supplies.size(); }
  double split(std::size_t i, std::size_t j) const { return splits[i * outputs() + j]; }
};

struct NodeFlows {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> flows;  // f_ij, row-major
  std::vector<double> outflow;  // per input, sum over j
  std::vector<double> inflow;   // per output, sum over i
  int iterations = 0;

  double flow(std::size_t i, std::size_t j) const { return flows[i * outputs + j]; }
};

/// Throws Error(InvalidArgument) on malformed problems (negative entries,
/// mismatched sizes, split rows not summing to one).
void check_node_problem(const NodeProblem& p);

/// Supply-constrained FIFO node with priority-proportional sharing.
///
/// Each pass computes, for every output still receiving flow, the reduction
/// factor a_j = residual supply / sum of directed priorities of its pending
/// inputs, and takes the smallest (lowest index on ties). Inputs whose whole
/// demand fits within their share at that factor are served in full; if none
/// fits, every pending input of the minimizing output is served at the factor.
/// At least one input is settled per pass, so at most m passes run.
///
/// If the pending inputs of some active output all carry zero priority, every
/// pending input is treated as having unit priority for that pass.
NodeFlows solve_node(const NodeProblem& p);

struct MergeFlows {
  double upstream = 0.0;
  double ramp = 0.0;
};

/// Mainline link + on-ramp into a single downstream link.
MergeFlows solve_merge(double upstream_demand, double ramp_demand, double downstream_supply,
                       double upstream_priority, double ramp_priority);

struct TollNodeInput {
  double toll_share = 0.0;     // alpha^1
  double general_share = 1.0;  // alpha^2
  double ramp_demand = 0.0;    // r^d
  double upstream_demand[2] = {0.0, 0.0};     // f^{xi,d}_{i-1}
  double downstream_supply[2] = {0.0, 0.0};   // f^{xi,s}_i
  double upstream_priority[2] = {0.0, 0.0};   // p^{xi,f}_{i-1}
  double ramp_priority = 0.0;                 // p^r_i
};

struct TollNodeResult {
  double ramp[2] = {0.0, 0.0};       // r^xi
  double upstream[2] = {0.0, 0.0};   // f^xi_{i-1}
  double potential[2] = {0.0, 0.0};  // psi^xi
  double group_reduction[2] = {1.0, 1.0};  // lambda^xi
  double reduction = 1.0;            // lambda
};

/// Potential flow psi^xi for one lane group.
double potential_flow(double share, double ramp_demand, double upstream_demand,
                      double downstream_supply, double upstream_priority, double ramp_priority);

/// Merge of an entrance (split between lane groups by alpha) with the two
/// parallel upstream links into the two parallel downstream links. The
/// entrance flows stay proportional to alpha; both are scaled by the tighter
/// lane group's reduction factor.
TollNodeResult solve_toll_node(const TollNodeInput& in);

}  // namespace tollane

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

#include "tollane/node.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tollane/errors.hpp"

namespace tollane {

void check_node_problem(const NodeProblem& p) {
  const std::size_t m = p.inputs();
  const std::size_t n = p.outputs();
  if (m == 0 || n == 0) throw Error(ErrorCode::InvalidArgument, "node needs inputs and outputs");
  if (p.splits.size() != m * n || p.priorities.size() != m) {
    throw Error(ErrorCode::InvalidArgument, "node problem dimensions do not match");
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (!(p.demands[i] >= 0.0) || !(p.priorities[i] >= 0.0)) {
      throw Error(ErrorCode::InvalidArgument,
                  "input " + std::to_string(i) + ": demand and priority must be >= 0");
    }
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double b = p.split(i, j);
      if (!(b >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "split ratios must be >= 0");
      }
      row += b;
    }
    if (std::abs(row - 1.0) > kFlowTolerance) {
      throw Error(ErrorCode::InvalidArgument,
                  "split ratios of input " + std::to_string(i) + " sum to " + std::to_string(row));
    }
  }
  for (double s : p.supplies) {
    if (!(s >= 0.0)) throw Error(ErrorCode::InvalidArgument, "supplies must be >= 0");
  }
}

NodeFlows solve_node(const NodeProblem& p) {
  check_node_problem(p);
  const std::size_t m = p.inputs();
  const std::size_t n = p.outputs();

  NodeFlows out;
  out.inputs = m;
  out.outputs = n;
  out.flows.assign(m * n, 0.0);
  out.outflow.assign(m, 0.0);
  out.inflow.assign(n, 0.0);

  // pending[i*n+j]: flow i->j still to be decided (V_j membership).
  std::vector<char> pending(m * n, 0);
  std::vector<char> settled(m, 1);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (p.demands[i] * p.split(i, j) > 0.0) {
        pending[i * n + j] = 1;
        settled[i] = 0;
      }
    }
  }
  std::vector<double> residual = p.supplies;
  std::vector<double> weight(m);
  std::vector<double> factor(n);

  auto output_active = [&](std::size_t j) {
    for (std::size_t i = 0; i < m; ++i) {
      if (pending[i * n + j]) return true;
    }
    return false;
  };

  while (true) {
    bool any_active = false;
    for (std::size_t j = 0; j < n && !any_active; ++j) any_active = output_active(j);
    if (!any_active) break;
    ++out.iterations;

    // Degenerate pass: an active output whose pending inputs all have zero priority.
    bool uniform = false;
    for (std::size_t j = 0; j < n && !uniform; ++j) {
      if (!output_active(j)) continue;
      double denom = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        if (pending[i * n + j]) denom += p.priorities[i] * p.split(i, j);
      }
      uniform = !(denom > 0.0);
    }
    for (std::size_t i = 0; i < m; ++i) weight[i] = uniform ? 1.0 : p.priorities[i];

    std::size_t best = n;
    double best_factor = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (!output_active(j)) continue;
      double denom = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        if (pending[i * n + j]) denom += weight[i] * p.split(i, j);
      }
      factor[j] = std::max(residual[j], 0.0) / denom;
      if (factor[j] < best_factor) {
        best_factor = factor[j];
        best = j;
      }
    }

    std::vector<std::size_t> served;
    for (std::size_t i = 0; i < m; ++i) {
      if (pending[i * n + best] && p.demands[i] <= best_factor * weight[i] + kFlowTolerance) {
        served.push_back(i);
      }
    }
    const bool demand_constrained = !served.empty();
    if (!demand_constrained) {
      for (std::size_t i = 0; i < m; ++i) {
        if (pending[i * n + best]) served.push_back(i);
      }
    }
    for (std::size_t i : served) {
      for (std::size_t j = 0; j < n; ++j) {
        const double f = demand_constrained ? p.demands[i] * p.split(i, j)
                                            : best_factor * weight[i] * p.split(i, j);
        out.flows[i * n + j] = f;
        if (pending[i * n + j]) residual[j] -= f;
        pending[i * n + j] = 0;
      }
      settled[i] = 1;
    }
  }

  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      out.outflow[i] += out.flows[i * n + j];
      out.inflow[j] += out.flows[i * n + j];
    }
  }
  return out;
}

MergeFlows solve_merge(double upstream_demand, double ramp_demand, double downstream_supply,
                       double upstream_priority, double ramp_priority) {
  const double fd = upstream_demand;
  const double rd = ramp_demand;
  const double fs = downstream_supply;
  if (fd + rd <= fs + kFlowTolerance) return {fd, rd};
  if (fd <= upstream_priority * fs + kFlowTolerance) return {fd, std::max(fs - fd, 0.0)};
  if (rd <= ramp_priority * fs + kFlowTolerance) return {std::max(fs - rd, 0.0), rd};
  return {upstream_priority * fs, ramp_priority * fs};
}

double potential_flow(double share, double ramp_demand, double upstream_demand,
                      double downstream_supply, double upstream_priority, double ramp_priority) {
  const double denom = share * ramp_priority + upstream_priority;
  const double fair = denom > 0.0 ? downstream_supply * share * ramp_priority / denom : 0.0;
  const double residual = downstream_supply - upstream_demand;
  return std::min(std::max(fair, residual), share * ramp_demand);
}

TollNodeResult solve_toll_node(const TollNodeInput& in) {
  TollNodeResult out;
  const double shares[2] = {in.toll_share, in.general_share};
  if (in.ramp_demand > 0.0) {
    for (int g = 0; g < 2; ++g) {
      out.potential[g] = potential_flow(shares[g], in.ramp_demand, in.upstream_demand[g],
                                        in.downstream_supply[g], in.upstream_priority[g],
                                        in.ramp_priority);
      out.group_reduction[g] =
          shares[g] > 0.0 ? out.potential[g] / (shares[g] * in.ramp_demand) : 1.0;
    }
    out.reduction = std::clamp(std::min(out.group_reduction[0], out.group_reduction[1]), 0.0, 1.0);
  }
  for (int g = 0; g < 2; ++g) {
    out.ramp[g] = in.ramp_demand > 0.0 ? out.reduction * shares[g] * in.ramp_demand : 0.0;
    out.upstream[g] =
        std::max(0.0, std::min(in.upstream_demand[g], in.downstream_supply[g] - out.ramp[g]));
  }
  return out;
}

}  // namespace tollane

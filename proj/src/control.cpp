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

#include "tollane/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tollane/errors.hpp"

namespace tollane {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTargetTolerance = 1e-12;

std::size_t idx(int i) { return static_cast<std::size_t>(i); }

EntranceSignals signals_at(const LinkSignals& sig, const DualGeometry& g, int link) {
  EntranceSignals e;
  e.ramp_demand = sig.ramp_sending[idx(link)];
  e.ramp_priority = g.entrance_priority[idx(link)];
  for (int grp = 0; grp < 2; ++grp) {
    e.upstream_priority[grp] = g.groups[idx(grp)][idx(link - 1)].mainline_priority;
    e.upstream_demand[grp] = sig.sending[idx(grp)][idx(link - 1)];
    e.downstream_supply[grp] = sig.receiving[idx(grp)][idx(link)];
  }
  return e;
}

double threshold(const EntranceSignals& e, int grp) {
  const double fs = e.downstream_supply[grp];
  const double fd = e.upstream_demand[grp];
  const double rd = e.ramp_demand;
  double a = (fs - fd) / rd;
  if (e.ramp_priority > 0.0) a = std::max(a, fs / rd - e.upstream_priority[grp] / e.ramp_priority);
  return std::clamp(a, 0.0, 1.0);
}

}  // namespace

EntranceSignals entrance_signals(const TrafficState& s, const DualGeometry& g, int link) {
  if (link < 1 || link > g.mainline_count()) {
    throw Error(ErrorCode::InvalidArgument, "entrance link out of range");
  }
  return signals_at(demands_supplies(s, g), g, link);
}

double group_reduction(const EntranceSignals& e, int group, double share) {
  if (!(share > 0.0) || !(e.ramp_demand > 0.0)) return 1.0;
  const double fs = e.downstream_supply[group];
  const double fd = e.upstream_demand[group];
  const double pf = e.upstream_priority[group];
  const double pr = e.ramp_priority;
  const double denom = share * pr + pf;
  const double fair = denom > 0.0 ? fs * pr / (e.ramp_demand * denom) : 0.0;
  const double residual = (fs - fd) / (share * e.ramp_demand);
  return std::clamp(std::max(fair, residual), 0.0, 1.0);
}

double group_reduction_right(const EntranceSignals& e, int group, double share) {
  if (share > 0.0 || !(e.ramp_demand > 0.0)) return group_reduction(e, group, share);
  const double fs = e.downstream_supply[group];
  const double fd = e.upstream_demand[group];
  const double pf = e.upstream_priority[group];
  const double pr = e.ramp_priority;
  double fair = 0.0;
  if (pf > 0.0) {
    fair = fs * pr / (e.ramp_demand * pf);
  } else if (pr > 0.0 && fs > 0.0) {
    fair = kInf;
  }
  const double residual = fs > fd ? kInf : (fs < fd ? -kInf : 0.0);
  return std::clamp(std::max(fair, residual), 0.0, 1.0);
}

double entrance_reduction(const EntranceSignals& e, double toll_share) {
  return std::min(group_reduction(e, kTollGroup, toll_share),
                  group_reduction(e, kGeneralGroup, 1.0 - toll_share));
}

double toll_entrance_flow(const EntranceSignals& e, double toll_share) {
  if (!(e.ramp_demand > 0.0)) return 0.0;
  return entrance_reduction(e, toll_share) * toll_share * e.ramp_demand;
}

GrowthBounds growth_bounds(const EntranceSignals& e) {
  GrowthBounds b;
  if (!(e.ramp_demand > 0.0)) return b;
  b.threshold[0] = threshold(e, kTollGroup);
  b.threshold[1] = threshold(e, kGeneralGroup);
  const double a1 = b.threshold[0];
  const double a2 = b.threshold[1];
  const bool toll_blocked = e.downstream_supply[0] <= e.upstream_demand[0];
  const bool general_blocked = e.downstream_supply[1] <= e.upstream_demand[1];

  if (!(e.downstream_supply[0] + e.downstream_supply[1] > 0.0) ||
      (a1 + a2 < 1.0 && e.ramp_priority <= 0.0 && toll_blocked && general_blocked)) {
    b.optimal_min = 0.0;
    b.optimal_max = 1.0;
    b.best_reduction = 0.0;
  } else if (a1 + a2 >= 1.0) {
    b.optimal_min = 1.0 - a2;
    b.optimal_max = a1;
    b.best_reduction = 1.0;
  } else {
    const double lo_edge = a1;
    const double hi_edge = 1.0 - a2;
    double alpha = 0.0;
    if (group_reduction(e, kTollGroup, hi_edge) >= group_reduction_right(e, kGeneralGroup, a2)) {
      alpha = hi_edge;
    } else if (group_reduction(e, kGeneralGroup, 1.0 - lo_edge) >=
               group_reduction_right(e, kTollGroup, a1)) {
      alpha = lo_edge;
    } else {
      // lambda^1(alpha) - lambda^2(1 - alpha) is decreasing on the bracket.
      double lo = lo_edge;
      double hi = hi_edge;
      for (int iter = 0; iter < 400 && hi - lo > 0.0; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double gap =
            group_reduction(e, kTollGroup, mid) - group_reduction(e, kGeneralGroup, 1.0 - mid);
        if (gap > 0.0) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      alpha = entrance_reduction(e, lo) >= entrance_reduction(e, hi) ? lo : hi;
      if (lo <= lo_edge) alpha = hi;
    }
    b.optimal_min = alpha;
    b.optimal_max = alpha;
    b.best_reduction = entrance_reduction(e, alpha);
  }
  b.toll_flow_min = toll_entrance_flow(e, b.optimal_min);
  b.toll_flow_max = toll_entrance_flow(e, b.optimal_max);
  return b;
}

GrowthBounds growth_bounds(const TrafficState& s, const DualGeometry& g, int link) {
  return growth_bounds(entrance_signals(s, g, link));
}

GrowthBounds freeflow_correction(const GrowthBounds& b, int toll_lanes, int general_lanes,
                                 double ramp_demand) {
  GrowthBounds out = b;
  const double share = static_cast<double>(toll_lanes) / (toll_lanes + general_lanes);
  if (b.threshold[0] + b.threshold[1] > 1.0 && b.threshold[0] > share) {
    out.threshold[0] = std::max(1.0 - b.threshold[1], share);
    out.optimal_max = out.threshold[0];
    out.toll_flow_max = out.threshold[0] * ramp_demand;
  }
  return out;
}

TollTargets toll_targets(const DualGeometry& g) {
  const auto& base = g.base;
  const std::size_t n = base.links.size();
  const int exit = base.exit_index();
  const auto& toll = g.groups[kTollGroup];
  TollTargets t;
  t.maintainable_flow.assign(n, 0.0);
  t.maintainable_density.assign(n, 0.0);
  t.equilibrium_flow.assign(n, 0.0);
  t.equilibrium_density.assign(n, 0.0);
  t.equilibrium_ramp.assign(n, 0.0);

  t.maintainable_flow[idx(exit)] = toll[idx(exit)].capacity;
  for (int i = exit - 1; i >= 1; --i) {
    t.maintainable_flow[idx(i)] = std::min(
        toll[idx(i)].outflow_capacity, t.maintainable_flow[idx(i + 1)] / base.split_through(i + 1));
  }
  for (int i = 1; i <= exit; ++i) {
    t.maintainable_density[idx(i)] =
        t.maintainable_flow[idx(i)] / (base.split_through(i) * base.link(i).fd.freeflow);
  }

  t.entrances = g.entrance_links();
  if (t.entrances.empty() || t.entrances.front() != 1) {
    throw Error(ErrorCode::InvalidTargets, "the first entrance must feed link 1");
  }
  const std::size_t m_count = t.entrances.size();
  for (std::size_t m = 0; m < m_count; ++m) {
    const int first = t.entrances[m];
    const int next = m + 1 < m_count ? t.entrances[m + 1] : exit + 1;
    t.equilibrium_flow[idx(first)] = t.maintainable_flow[idx(first)];
    for (int i = first + 1; i < next; ++i) {
      t.equilibrium_flow[idx(i)] = base.split_through(i) * t.equilibrium_flow[idx(i - 1)];
    }
    const double ramp = t.equilibrium_flow[idx(first)] / base.split_through(first) -
                        t.equilibrium_flow[idx(first - 1)];
    if (ramp < -kTargetTolerance) {
      throw Error(ErrorCode::InvalidTargets,
                  "equilibrium toll-lane entrance flow at link " + std::to_string(first) +
                      " is negative (" + std::to_string(ramp) + ")");
    }
    t.equilibrium_ramp[idx(first)] = std::max(0.0, ramp);
  }
  for (int i = 1; i <= exit; ++i) {
    t.equilibrium_density[idx(i)] =
        t.equilibrium_flow[idx(i)] / (base.split_through(i) * base.link(i).fd.freeflow);
  }
  for (std::size_t m = 0; m < m_count; ++m) {
    const int first = t.entrances[m];
    const int next = m + 1 < m_count ? t.entrances[m + 1] : exit + 1;
    double budget = 0.0;
    for (int i = first; i < next; ++i) budget += t.equilibrium_density[idx(i)];
    t.segment_budget.push_back(budget);
  }
  return t;
}

std::vector<ControlDirective> compute_directives(const TrafficState& s, const DualGeometry& g,
                                                 const TollTargets& targets) {
  const auto& base = g.base;
  const int exit = base.exit_index();
  const auto& entrances = targets.entrances;
  const int m_count = static_cast<int>(entrances.size());
  const LinkSignals sig = demands_supplies(s, g);

  std::vector<ControlDirective> out(idx(m_count));
  std::vector<EntranceSignals> es(idx(m_count));
  std::vector<double> estimate_shares(base.links.size(), std::numeric_limits<double>::quiet_NaN());
  for (int m = 0; m < m_count; ++m) {
    const int i = entrances[idx(m)];
    es[idx(m)] = signals_at(sig, g, i);
    GrowthBounds b = growth_bounds(es[idx(m)]);
    b = freeflow_correction(b, g.toll_lanes, g.general_lanes, es[idx(m)].ramp_demand);
    const double upstream = sig.sending[kTollGroup][idx(i - 1)];
    const double room = std::min(sig.receiving[kTollGroup][idx(i)],
                                 targets.equilibrium_flow[idx(i)] / base.split_through(i));
    if (upstream + b.toll_flow_max > room) {
      b.toll_flow_max = std::max(b.toll_flow_min, room - upstream);
    }
    out[idx(m)].link = i;
    out[idx(m)].bounds = b;
    estimate_shares[idx(i)] = b.optimal_min;
  }

  // Flow estimates with every entrance at its smallest admissible toll flow.
  const StepFlows est =
      step(s, g, 0.0, std::vector<double>(base.links.size(), 0.0), estimate_shares).flows;
  const auto& f_est = est.mainline[kTollGroup];
  const auto& s_est = est.offramp[kTollGroup];

  double excess = 0.0;
  double gamma = 1.0;
  for (int m = m_count - 1; m >= 0; --m) {
    const int first = entrances[idx(m)];
    const int next = m + 1 < m_count ? entrances[idx(m + 1)] : exit + 1;
    double vehicles = 0.0;
    double exits = 0.0;
    for (int i = first; i < next; ++i) {
      vehicles += s.vehicles[kTollGroup][idx(i)];
      exits += s_est[idx(i)];
    }
    excess += vehicles - gamma * targets.segment_budget[idx(m)] + f_est[idx(first - 1)] -
              f_est[idx(next - 1)] - exits;
    auto& d = out[idx(m)];
    d.excess = excess;
    d.gamma = gamma;
    d.toll_flow = std::max(d.bounds.toll_flow_min, std::min(d.bounds.toll_flow_max, -excess));
    if (m == 0) break;
    excess = std::max(0.0, excess + d.toll_flow);
    const double upstream_target = targets.equilibrium_flow[idx(first - 1)];
    gamma = upstream_target > 0.0
                ? std::clamp((sig.receiving[kTollGroup][idx(first)] - d.toll_flow) / upstream_target,
                             0.0, 1.0)
                : 1.0;
  }

  const double lane_share = g.share(kTollGroup);
  for (int m = 0; m < m_count; ++m) {
    auto& d = out[idx(m)];
    const double rd = es[idx(m)].ramp_demand;
    const double lambda = d.bounds.best_reduction;
    d.toll_share = (rd > 0.0 && lambda > 0.0) ? std::clamp(d.toll_flow / (lambda * rd), 0.0, 1.0)
                                              : lane_share;
    d.general_share = 1.0 - d.toll_share;
  }
  return out;
}

TollLaneController::TollLaneController(const DualGeometry& g) : targets_(toll_targets(g)) {}

std::vector<double> TollLaneController::toll_shares(const TrafficState& s, const DualGeometry& g) {
  last_ = compute_directives(s, g, targets_);
  std::vector<double> shares(g.base.links.size(), std::numeric_limits<double>::quiet_NaN());
  for (const auto& d : last_) shares[idx(d.link)] = d.toll_share;
  return shares;
}

}  // namespace tollane

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

#include "tollane/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "tollane/errors.hpp"

namespace tollane {

namespace {

constexpr double kTol = kEquilibriumTolerance;
constexpr double kNearFactor = 1e3;

std::size_t idx(int i) { return static_cast<std::size_t>(i); }

std::vector<double> padded(const std::vector<double>& v, std::size_t n) {
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < std::min(n, v.size()); ++i) {
    if (!(v[i] >= 0.0)) throw Error(ErrorCode::InvalidArgument, "ramp demands must be >= 0");
    out[i] = v[i];
  }
  return out;
}

// Distance of `gap` from zero is "near" when it is just outside the tolerance.
bool near(double gap) {
  const double a = std::abs(gap);
  return a > kTol && a <= kNearFactor * kTol;
}

}  // namespace

MaxFlows max_flows(const FreewayGeometry& g, double entrance_flow,
                   const std::vector<double>& ramp_demands) {
  if (!(entrance_flow >= 0.0)) throw Error(ErrorCode::InvalidArgument, "entrance flow must be >= 0");
  const std::size_t n = g.links.size();
  const int exit = g.exit_index();
  const std::vector<double> d = padded(ramp_demands, n);
  MaxFlows mf;
  mf.mainline.assign(n, 0.0);
  mf.ramp.assign(n, 0.0);
  mf.mainline[0] = std::min(entrance_flow, g.link(0).outflow_capacity);
  for (int i = 1; i <= exit; ++i) {
    const auto& link = g.link(i);
    if (i < exit) mf.ramp[idx(i)] = std::min(d[idx(i)], link.ramp.on_capacity);
    mf.mainline[idx(i)] = std::min(link.ramp.split_through() * (mf.mainline[idx(i - 1)] + mf.ramp[idx(i)]),
                                   link.outflow_capacity);
  }
  return mf;
}

EquilibriumFlows equilibrium_flows(const FreewayGeometry& g, const MaxFlows& mf) {
  const std::size_t n = g.links.size();
  if (mf.mainline.size() != n || mf.ramp.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "maximum flows do not match the geometry");
  }
  const int exit = g.exit_index();
  EquilibriumFlows eq;
  eq.mainline.assign(n, 0.0);
  eq.ramp.assign(n, 0.0);
  eq.cases.assign(n, NodeCase::Upstream);
  eq.mainline[idx(exit)] = mf.mainline[idx(exit)];
  for (int i = exit; i >= 1; --i) {
    const double through = eq.mainline[idx(i)] / g.split_through(i);
    const double pf = g.link(i - 1).mainline_priority;
    const double pr = g.link(i).ramp_priority;
    const double fbar = mf.mainline[idx(i - 1)];
    const double rbar = mf.ramp[idx(i)];
    double up = 0.0;
    double ramp = 0.0;
    if (fbar <= pf * through) {
      eq.cases[idx(i)] = NodeCase::Upstream;
      up = fbar;
      ramp = through - fbar;
    } else if (rbar <= pr * through) {
      eq.cases[idx(i)] = NodeCase::Ramp;
      ramp = rbar;
      up = through - rbar;
    } else {
      eq.cases[idx(i)] = NodeCase::Proportional;
      up = pf * through;
      ramp = pr * through;
    }
    eq.mainline[idx(i - 1)] = std::max(0.0, up);
    eq.ramp[idx(i)] = std::max(0.0, ramp);
  }
  return eq;
}

const char* to_string(FeasibilityClass c) {
  switch (c) {
    case FeasibilityClass::StrictlyFeasible:
      return "strictly-feasible";
    case FeasibilityClass::Feasible:
      return "feasible";
    case FeasibilityClass::Infeasible:
      return "infeasible";
  }
  return "unknown";
}

FeasibilityClass classify(const FreewayGeometry& g, double entrance_flow,
                          const std::vector<double>& ramp_demands) {
  const MaxFlows mf = max_flows(g, entrance_flow, ramp_demands);
  FeasibilityClass out = FeasibilityClass::StrictlyFeasible;
  double f = mf.mainline[0];
  for (int i = 1; i <= g.exit_index(); ++i) {
    f = g.split_through(i) * (f + mf.ramp[idx(i)]);
    const double cap = g.link(i).outflow_capacity;
    if (f > cap + kTol) return FeasibilityClass::Infeasible;
    if (f >= cap - kTol) out = FeasibilityClass::Feasible;
  }
  return out;
}

static void build_segments(DensitySetStructure& e, int exit) {
  auto in = [](const std::vector<int>& v, int i) { return std::find(v.begin(), v.end(), i) != v.end(); };
  int previous = 0;
  for (int bottleneck : e.bottlenecks) {
    DensitySegment s;
    s.first = previous + 1;
    s.last = bottleneck;
    s.uncongested_end = previous;
    s.congested_start = bottleneck + 1;
    for (int i = s.first; i <= s.last; ++i) {
      if (in(e.forced_uncongested, i)) s.uncongested_end = i;
    }
    for (int i = s.last; i >= s.first; --i) {
      if (in(e.forced_congested, i)) s.congested_start = i;
    }
    if (s.congested_start <= s.uncongested_end) {
      e.near_degenerate.push_back(s.last);
      s.congested_start = s.uncongested_end + 1;
    }
    e.segments.push_back(s);
    previous = bottleneck;
  }
  DensitySegment tail;
  tail.first = previous + 1;
  tail.last = exit;
  tail.uncongested_end = exit;
  tail.congested_start = exit + 1;
  e.segments.push_back(tail);
  std::sort(e.near_degenerate.begin(), e.near_degenerate.end());
  e.near_degenerate.erase(std::unique(e.near_degenerate.begin(), e.near_degenerate.end()),
                          e.near_degenerate.end());
}

bool DensitySetStructure::single_vector() const {
  return std::all_of(segments.begin(), segments.end(),
                     [](const DensitySegment& s) { return s.single(); });
}

DensitySetStructure density_set(const FreewayGeometry& g, const MaxFlows& mf,
                                const EquilibriumFlows& eq) {
  const std::size_t n = g.links.size();
  if (eq.mainline.size() != n || eq.ramp.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "equilibrium flows do not match the geometry");
  }
  const int k = g.mainline_count();
  const int exit = g.exit_index();
  const auto& f = eq.mainline;
  const auto& r = eq.ramp;

  DensitySetStructure e;
  e.uncongested.assign(n, 0.0);
  e.congested.assign(n, 0.0);
  for (int i = 1; i <= exit; ++i) {
    const auto& link = g.link(i);
    e.uncongested[idx(i)] = f[idx(i)] / (link.ramp.split_through() * link.fd.freeflow);
    e.congested[idx(i)] =
        link.fd.jam - (r[idx(i)] + f[idx(i - 1)]) / link.fd.congestion;
  }

  for (int i = 1; i <= k; ++i) {
    const double cap_gap = f[idx(i)] - g.link(i).outflow_capacity;
    const double supply_gap = f[idx(i)] + r[idx(i + 1)] - g.link(i + 1).inflow_capacity;
    if (near(cap_gap) || near(supply_gap)) e.near_degenerate.push_back(i);
    if (cap_gap >= -kTol || supply_gap >= -kTol) e.bottlenecks.push_back(i);
  }
  for (int i = 1; i <= k - 1; ++i) {
    const double lhs = f[idx(i)] * g.link(i + 1).ramp_priority;
    const double rhs = r[idx(i + 1)] * g.link(i).mainline_priority;
    if (f[idx(i)] < g.link(i).outflow_capacity - kTol && lhs < rhs - kTol) {
      e.forced_uncongested.push_back(i);
    }
  }
  for (int i = 1; i <= k; ++i) {
    const double supply_gap = f[idx(i - 1)] + r[idx(i)] - g.link(i).inflow_capacity;
    bool congested = r[idx(i)] < mf.ramp[idx(i)] - kTol && supply_gap < -kTol;
    if (i == 1) {
      congested = congested || (f[0] < mf.mainline[0] - kTol && supply_gap < -kTol);
    }
    if (near(r[idx(i)] - mf.ramp[idx(i)]) || near(supply_gap)) e.near_degenerate.push_back(i);
    if (congested) e.forced_congested.push_back(i);
  }
  build_segments(e, exit);
  return e;
}

std::vector<double> density_member(const DensitySetStructure& e, const std::vector<int>& free_link,
                                   const std::vector<double>& position) {
  std::vector<double> n(e.uncongested.size(), 0.0);
  for (std::size_t m = 0; m < e.segments.size(); ++m) {
    const auto& s = e.segments[m];
    int h = s.uncongested_end;
    double theta = 0.0;
    if (!s.single()) {
      if (m >= free_link.size() || m >= position.size()) {
        throw Error(ErrorCode::InvalidArgument, "a free link and position are needed per segment");
      }
      h = free_link[m];
      theta = position[m];
      if (h < s.family_begin() || h > s.family_end() || !(theta >= 0.0 && theta <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "free link or position outside the family");
      }
    }
    for (int j = s.first; j <= s.last; ++j) {
      const double u = e.uncongested[idx(j)];
      const double c = e.congested[idx(j)];
      if (s.single()) {
        n[idx(j)] = j <= s.uncongested_end ? u : c;
      } else if (j < h) {
        n[idx(j)] = u;
      } else if (j > h) {
        n[idx(j)] = c;
      } else {
        n[idx(j)] = u + theta * (c - u);
      }
    }
  }
  return n;
}

bool contains(const DensitySetStructure& e, const std::vector<double>& n, double tolerance) {
  if (n.size() != e.uncongested.size()) return false;
  auto close = [&](double a, double b) { return std::abs(a - b) <= tolerance; };
  for (const auto& s : e.segments) {
    if (s.single()) {
      for (int j = s.first; j <= s.last; ++j) {
        const double target = j <= s.uncongested_end ? e.uncongested[idx(j)] : e.congested[idx(j)];
        if (!close(n[idx(j)], target)) return false;
      }
      continue;
    }
    bool found = false;
    for (int h = s.family_begin(); h <= s.family_end() && !found; ++h) {
      bool ok = n[idx(h)] >= e.uncongested[idx(h)] - tolerance &&
                n[idx(h)] <= e.congested[idx(h)] + tolerance;
      for (int j = s.first; j <= s.last && ok; ++j) {
        if (j < h) ok = close(n[idx(j)], e.uncongested[idx(j)]);
        if (j > h) ok = close(n[idx(j)], e.congested[idx(j)]);
      }
      found = ok;
    }
    if (!found) return false;
  }
  return true;
}

bool is_equilibrium(const FreewayGeometry& g, const MaxFlows& mf, const EquilibriumFlows& eq,
                    const std::vector<double>& n) {
  return contains(density_set(g, mf, eq), n);
}

TrafficState equilibrium_state(const FreewayGeometry& g, const MaxFlows& mf,
                               const std::vector<double>& n) {
  TrafficState s = empty_state(g);
  if (n.size() != g.links.size()) {
    throw Error(ErrorCode::InvalidArgument, "density vector does not match the geometry");
  }
  for (std::size_t i = 1; i < n.size(); ++i) s.vehicles[0][i] = n[i];
  for (int i = 1; i <= g.mainline_count(); ++i) {
    const auto& ramp = g.link(i).ramp;
    if (ramp.has_on_ramp()) s.ramp_queues[idx(i)] = mf.ramp[idx(i)] / ramp.on_freeflow;
  }
  s.entrance_queue = mf.mainline[0] / g.link(0).fd.freeflow;
  return s;
}

EquilibriumReport analyze_equilibrium(const FreewayGeometry& g, double entrance_flow,
                                      const std::vector<double>& ramp_demands) {
  EquilibriumReport rep;
  rep.max = max_flows(g, entrance_flow, ramp_demands);
  rep.flows = equilibrium_flows(g, rep.max);
  rep.feasibility = classify(g, entrance_flow, ramp_demands);
  rep.densities = density_set(g, rep.max, rep.flows);
  return rep;
}

std::string render(const EquilibriumReport& r) {
  std::ostringstream os;
  os.precision(6);
  const auto& e = r.densities;
  os << "feasibility: " << to_string(r.feasibility) << '\n';
  os << "bottlenecks:";
  if (e.bottlenecks.empty()) os << " none";
  for (int i : e.bottlenecks) os << ' ' << i;
  auto list = [&](const char* label, const std::vector<int>& v) {
    os << '\n' << label << ':';
    if (v.empty()) os << " none";
    for (int i : v) os << ' ' << i;
  };
  list("forced uncongested", e.forced_uncongested);
  list("forced congested", e.forced_congested);
  char buf[160];
  std::snprintf(buf, sizeof buf, "\n%4s %11s %11s %11s %11s %11s %11s\n", "link", "f_max", "r_max",
                "f", "r", "n_u", "n_c");
  os << buf;
  for (std::size_t i = 0; i < r.flows.mainline.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%4zu %11.6g %11.6g %11.6g %11.6g", i, r.max.mainline[i],
                  r.max.ramp[i], r.flows.mainline[i], r.flows.ramp[i]);
    os << buf;
    if (i > 0) {
      std::snprintf(buf, sizeof buf, " %11.6g %11.6g", e.uncongested[i], e.congested[i]);
      os << buf;
    }
    os << '\n';
  }
  for (std::size_t m = 0; m < e.segments.size(); ++m) {
    const auto& s = e.segments[m];
    os << "segment " << m + 1 << ": links " << s.first << ".." << s.last;
    if (s.single()) {
      os << ", single vector (n_u through " << s.uncongested_end << ", n_c from "
         << s.congested_start << ")\n";
    } else {
      os << ", families h = " << s.family_begin() << ".." << s.family_end() << '\n';
    }
  }
  if (!e.near_degenerate.empty()) {
    os << "near-degenerate links:";
    for (int i : e.near_degenerate) os << ' ' << i;
    os << '\n';
  }
  return os.str();
}

}  // namespace tollane

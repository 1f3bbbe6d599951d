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

#include "tollane/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tollane/errors.hpp"
#include "tollane/node.hpp"

namespace tollane {

namespace {

constexpr double kStateTolerance = 1e-9;
const double kNaN = std::numeric_limits<double>::quiet_NaN();

std::size_t idx(int i) { return static_cast<std::size_t>(i); }

void check_state_shape(const TrafficState& s, int groups, std::size_t links) {
  if (s.groups() != groups || s.ramp_queues.size() != links) {
    throw Error(ErrorCode::InvalidArgument, "traffic state does not match the geometry");
  }
  for (const auto& v : s.vehicles) {
    if (v.size() != links) {
      throw Error(ErrorCode::InvalidArgument, "traffic state does not match the geometry");
    }
  }
}

// Clamps round-off and throws if the state left its admissible range.
void settle_value(double& value, double upper, const char* what, int link) {
  if (value < -kStateTolerance || value > upper + kStateTolerance) {
    std::ostringstream os;
    os << what << " on link " << link << " reached " << value << " (bounds 0.." << upper << ")";
    throw Error(ErrorCode::StateCorruption, os.str());
  }
  value = std::clamp(value, 0.0, upper);
}

std::vector<double> padded_ramps(const std::vector<double>& ramps, std::size_t links) {
  std::vector<double> d(links, 0.0);
  for (std::size_t i = 0; i < std::min(links, ramps.size()); ++i) {
    if (!(ramps[i] >= 0.0)) throw Error(ErrorCode::InvalidArgument, "ramp demands must be >= 0");
    d[i] = ramps[i];
  }
  return d;
}

}  // namespace

double TrafficState::link_total(int link) const {
  double sum = 0.0;
  for (const auto& v : vehicles) sum += v.at(idx(link));
  return sum;
}

double TrafficState::total() const {
  double sum = entrance_queue;
  for (const auto& v : vehicles) {
    for (std::size_t i = 1; i < v.size(); ++i) sum += v[i];
  }
  for (double q : ramp_queues) sum += q;
  return sum;
}

TrafficState empty_state(const FreewayGeometry& g) {
  TrafficState s;
  s.vehicles.assign(1, std::vector<double>(g.links.size(), 0.0));
  s.ramp_queues.assign(g.links.size(), 0.0);
  return s;
}

TrafficState empty_state(const DualGeometry& g) {
  TrafficState s;
  s.vehicles.assign(2, std::vector<double>(g.base.links.size(), 0.0));
  s.ramp_queues.assign(g.base.links.size(), 0.0);
  return s;
}

void StepSeries::add(long start, double value) {
  if (start < 0) throw Error(ErrorCode::InvalidArgument, "series breakpoints must be >= 0");
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw Error(ErrorCode::InvalidArgument, "demand values must be finite and >= 0");
  }
  auto it = std::lower_bound(points_.begin(), points_.end(), start,
                             [](const auto& p, long s) { return p.first < s; });
  if (it != points_.end() && it->first == start) {
    it->second = value;
  } else {
    points_.insert(it, {start, value});
  }
}

double StepSeries::at(long step) const {
  double value = 0.0;
  for (const auto& [start, v] : points_) {
    if (start > step) break;
    value = v;
  }
  return value;
}

bool StepSeries::is_constant() const {
  for (const auto& p : points_) {
    if (p.second != at(0)) return false;
  }
  return points_.empty() || points_.front().first == 0;
}

double DemandProfile::ramp_at(int link, long step) const {
  if (link < 0 || idx(link) >= ramps.size()) return 0.0;
  return ramps[idx(link)].at(step);
}

std::vector<double> DemandProfile::ramps_at(int links, long step) const {
  std::vector<double> d(idx(links), 0.0);
  for (int i = 0; i < links; ++i) d[idx(i)] = ramp_at(i, step);
  return d;
}

bool DemandProfile::is_constant() const {
  if (!entrance.is_constant()) return false;
  return std::all_of(ramps.begin(), ramps.end(), [](const StepSeries& s) { return s.is_constant(); });
}

double StepFlows::outflow(int group, int link) const {
  return mainline.at(idx(group)).at(idx(link)) + offramp.at(idx(group)).at(idx(link));
}

LinkSignals demands_supplies(const TrafficState& s, const FreewayGeometry& g) {
  const std::size_t n = g.links.size();
  check_state_shape(s, 1, n);
  LinkSignals sig;
  sig.sending.assign(1, std::vector<double>(n, 0.0));
  sig.receiving.assign(1, std::vector<double>(n, 0.0));
  sig.ramp_sending.assign(n, 0.0);
  const auto& entrance = g.links[0];
  sig.sending[0][0] = std::min(entrance.fd.freeflow * s.entrance_queue, entrance.outflow_capacity);
  for (std::size_t i = 1; i < n; ++i) {
    const auto& link = g.links[i];
    const double v = s.vehicles[0][i];
    sig.sending[0][i] =
        std::min(link.ramp.split_through() * link.fd.freeflow * v, link.outflow_capacity);
    sig.receiving[0][i] =
        std::max(0.0, std::min(link.fd.congestion * (link.fd.jam - v), link.inflow_capacity));
    if (link.ramp.has_on_ramp()) {
      sig.ramp_sending[i] =
          std::min(link.ramp.on_freeflow * s.ramp_queues[i], link.ramp.on_capacity);
    }
  }
  return sig;
}

LinkSignals demands_supplies(const TrafficState& s, const DualGeometry& g) {
  const std::size_t n = g.base.links.size();
  check_state_shape(s, 2, n);
  LinkSignals sig;
  sig.sending.assign(2, std::vector<double>(n, 0.0));
  sig.receiving.assign(2, std::vector<double>(n, 0.0));
  sig.ramp_sending.assign(n, 0.0);
  for (int grp = 0; grp < 2; ++grp) {
    for (std::size_t i = 1; i < n; ++i) {
      const auto& link = g.base.links[i];
      const auto& part = g.groups[idx(grp)][i];
      const double v = s.vehicles[idx(grp)][i];
      sig.sending[idx(grp)][i] =
          std::min(link.ramp.split_through() * link.fd.freeflow * v, part.outflow_capacity);
      sig.receiving[idx(grp)][i] =
          std::max(0.0, std::min(link.fd.congestion * (part.jam - v), part.inflow_capacity));
    }
  }
  for (std::size_t i = 1; i < n; ++i) {
    const auto& e = g.entrances[i];
    if (!e.has_on_ramp()) continue;
    const double queue = (i == 1) ? s.entrance_queue : s.ramp_queues[i];
    sig.ramp_sending[i] = std::min(e.on_freeflow * queue, e.on_capacity);
  }
  return sig;
}

std::pair<double, double> node_priorities(const FreewayGeometry& g, const LinkSignals& sig,
                                          int i) {
  const double pf = g.link(i - 1).mainline_priority;
  const double pr = g.link(i).ramp_priority;
  if (g.priority_mode == PriorityMode::Demand) {
    const double fd = sig.sending[0][idx(i - 1)];
    const double rd = sig.ramp_sending[idx(i)];
    if (fd + rd > 0.0) return {fd / (fd + rd), rd / (fd + rd)};
  }
  return {pf, pr};
}

StepResult step(const TrafficState& s, const FreewayGeometry& g, double entrance_demand,
                const std::vector<double>& ramp_demands) {
  if (!(entrance_demand >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "entrance demand must be >= 0");
  }
  const std::size_t n = g.links.size();
  const int exit = g.exit_index();
  const LinkSignals sig = demands_supplies(s, g);
  const std::vector<double> d = padded_ramps(ramp_demands, n);

  StepFlows fl;
  fl.mainline.assign(1, std::vector<double>(n, 0.0));
  fl.ramp.assign(1, std::vector<double>(n, 0.0));
  fl.offramp.assign(1, std::vector<double>(n, 0.0));
  fl.entrance_inflow = entrance_demand;
  fl.ramp_demand = d;
  fl.toll_share.assign(n, kNaN);

  auto& f = fl.mainline[0];
  auto& r = fl.ramp[0];
  for (int i = 1; i <= exit; ++i) {
    const auto [pf, pr] = node_priorities(g, sig, i);
    const MergeFlows m = solve_merge(sig.sending[0][idx(i - 1)], sig.ramp_sending[idx(i)],
                                     sig.receiving[0][idx(i)], pf, pr);
    f[idx(i - 1)] = m.upstream;
    r[idx(i)] = m.ramp;
  }
  f[idx(exit)] = sig.sending[0][idx(exit)];
  for (int i = 1; i <= exit; ++i) {
    const auto& ramp = g.link(i).ramp;
    if (ramp.has_off_ramp()) fl.offramp[0][idx(i)] = ramp.split_off / ramp.split_through() * f[idx(i)];
  }

  StepResult out{s, std::move(fl)};
  auto& ns = out.state;
  const auto& flows = out.flows;
  ns.step = s.step + 1;
  ns.entrance_queue = s.entrance_queue + entrance_demand - flows.mainline[0][0];
  settle_value(ns.entrance_queue, std::numeric_limits<double>::infinity(), "entrance queue", 0);
  for (int i = 1; i <= exit; ++i) {
    const std::size_t k = idx(i);
    double& v = ns.vehicles[0][k];
    v += flows.mainline[0][k - 1] + flows.ramp[0][k] - flows.mainline[0][k] - flows.offramp[0][k];
    settle_value(v, g.link(i).fd.jam, "vehicle count", i);
    double& q = ns.ramp_queues[k];
    q += d[k] - flows.ramp[0][k];
    settle_value(q, std::numeric_limits<double>::infinity(), "ramp queue", i);
  }
  return out;
}

StepResult step(const TrafficState& s, const DualGeometry& g, double entrance_demand,
                const std::vector<double>& ramp_demands, const std::vector<double>& toll_shares) {
  if (!(entrance_demand >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "entrance demand must be >= 0");
  }
  const std::size_t n = g.base.links.size();
  const int exit = g.exit_index();
  const LinkSignals sig = demands_supplies(s, g);
  const std::vector<double> d = padded_ramps(ramp_demands, n);

  StepFlows fl;
  fl.mainline.assign(2, std::vector<double>(n, 0.0));
  fl.ramp.assign(2, std::vector<double>(n, 0.0));
  fl.offramp.assign(2, std::vector<double>(n, 0.0));
  fl.entrance_inflow = entrance_demand;
  fl.ramp_demand = d;
  fl.ramp_demand[1] = 0.0;
  fl.toll_share.assign(n, kNaN);

  for (int i = 1; i <= exit; ++i) {
    const std::size_t k = idx(i);
    if (g.entrances[k].has_on_ramp()) {
      double alpha = k < toll_shares.size() ? toll_shares[k] : kNaN;
      if (std::isnan(alpha)) alpha = g.share(kTollGroup);
      if (alpha < 0.0 || alpha > 1.0) {
        throw Error(ErrorCode::InvalidArgument, "toll share must lie in [0, 1]");
      }
      TollNodeInput in;
      in.toll_share = alpha;
      in.general_share = 1.0 - alpha;
      in.ramp_demand = sig.ramp_sending[k];
      in.ramp_priority = g.entrance_priority[k];
      for (int grp = 0; grp < 2; ++grp) {
        in.upstream_demand[grp] = sig.sending[idx(grp)][k - 1];
        in.downstream_supply[grp] = sig.receiving[idx(grp)][k];
        in.upstream_priority[grp] = g.groups[idx(grp)][k - 1].mainline_priority;
      }
      const TollNodeResult res = solve_toll_node(in);
      fl.toll_share[k] = alpha;
      for (int grp = 0; grp < 2; ++grp) {
        fl.mainline[idx(grp)][k - 1] = res.upstream[grp];
        fl.ramp[idx(grp)][k] = res.ramp[grp];
      }
    } else {
      for (int grp = 0; grp < 2; ++grp) {
        fl.mainline[idx(grp)][k - 1] =
            std::min(sig.sending[idx(grp)][k - 1], sig.receiving[idx(grp)][k]);
      }
    }
  }
  for (int grp = 0; grp < 2; ++grp) {
    auto& f = fl.mainline[idx(grp)];
    f[idx(exit)] = sig.sending[idx(grp)][idx(exit)];
    for (int i = 1; i <= exit; ++i) {
      const auto& ramp = g.base.link(i).ramp;
      if (ramp.has_off_ramp()) {
        fl.offramp[idx(grp)][idx(i)] = ramp.split_off / ramp.split_through() * f[idx(i)];
      }
    }
  }

  StepResult out{s, std::move(fl)};
  auto& ns = out.state;
  const auto& flows = out.flows;
  ns.step = s.step + 1;
  ns.entrance_queue =
      s.entrance_queue + entrance_demand - flows.ramp[0][1] - flows.ramp[1][1];
  settle_value(ns.entrance_queue, std::numeric_limits<double>::infinity(), "entrance queue", 0);
  for (int grp = 0; grp < 2; ++grp) {
    const auto& f = flows.mainline[idx(grp)];
    for (int i = 1; i <= exit; ++i) {
      const std::size_t k = idx(i);
      double& v = ns.vehicles[idx(grp)][k];
      v += f[k - 1] + flows.ramp[idx(grp)][k] - f[k] - flows.offramp[idx(grp)][k];
      settle_value(v, g.groups[idx(grp)][k].jam, "vehicle count", i);
    }
  }
  for (int i = 2; i <= exit; ++i) {
    const std::size_t k = idx(i);
    double& q = ns.ramp_queues[k];
    q += d[k] - flows.ramp[0][k] - flows.ramp[1][k];
    settle_value(q, std::numeric_limits<double>::infinity(), "ramp queue", i);
  }
  return out;
}

std::vector<double> FixedSplit::toll_shares(const TrafficState&, const DualGeometry& g) {
  return std::vector<double>(g.base.links.size(), share_);
}

Simulation::Simulation(const FreewayGeometry& g, DemandProfile demand, const TrafficState& initial)
    : single_(&g), demand_(std::move(demand)) {
  check_state_shape(initial, 1, g.links.size());
  traj_.group_shares = {1.0};
  traj_.states.push_back(initial);
}

Simulation::Simulation(const DualGeometry& g, DemandProfile demand, const TrafficState& initial,
                       SplitPolicy* controller, Pricer* pricer)
    : dual_(&g), demand_(std::move(demand)), controller_(controller), pricer_(pricer) {
  check_state_shape(initial, 2, g.base.links.size());
  traj_.group_shares = {g.share(kTollGroup), g.share(kGeneralGroup)};
  traj_.states.push_back(initial);
}

void Simulation::advance(long steps) {
  for (long n = 0; n < steps; ++n) {
    const TrafficState& s = traj_.states.back();
    const long k = s.step;
    if (single_) {
      const int links = static_cast<int>(single_->links.size());
      StepResult r = step(s, *single_, demand_.entrance_at(k), demand_.ramps_at(links, k));
      traj_.flows.push_back(std::move(r.flows));
      traj_.states.push_back(std::move(r.state));
      continue;
    }
    const DualGeometry& g = *dual_;
    const int links = static_cast<int>(g.base.links.size());
    const std::vector<int> entrances = g.entrance_links();
    std::vector<double> requested(idx(links), kNaN);
    if (controller_) requested = controller_->toll_shares(s, g);
    requested.resize(idx(links), kNaN);
    for (double& a : requested) {
      if (std::isnan(a)) a = g.share(kTollGroup);
    }
    std::vector<double> realized = requested;
    std::vector<PriceQuote> quotes(idx(links));
    if (pricer_) {
      const LinkSignals sig = demands_supplies(s, g);
      for (int i : entrances) {
        quotes[idx(i)] = pricer_->quote(i, requested[idx(i)], sig.ramp_sending[idx(i)], s, g);
        realized[idx(i)] = quotes[idx(i)].toll_share;
      }
    }
    StepResult r = step(s, g, demand_.entrance_at(k), demand_.ramps_at(links, k), realized);
    if (controller_ || pricer_) {
      for (int i : entrances) {
        const double toll_entries = r.flows.ramp[kTollGroup][idx(i)];
        const double general_entries = r.flows.ramp[kGeneralGroup][idx(i)];
        if (pricer_) pricer_->settle(i, quotes[idx(i)], toll_entries, general_entries);
        EntranceRecord rec;
        rec.step = k;
        rec.link = i;
        rec.requested_share = requested[idx(i)];
        rec.toll_share = realized[idx(i)];
        rec.toll = quotes[idx(i)].toll;
        rec.revenue = rec.toll * toll_entries;
        traj_.entrance_log.push_back(rec);
      }
    }
    traj_.flows.push_back(std::move(r.flows));
    traj_.states.push_back(std::move(r.state));
  }
}

Trajectory run(const FreewayGeometry& g, const DemandProfile& demand, long horizon,
               const TrafficState& initial) {
  if (horizon < 1) throw Error(ErrorCode::InvalidArgument, "horizon must be at least one step");
  Simulation sim(g, demand, initial);
  sim.advance(horizon);
  return sim.release();
}

Trajectory run(const DualGeometry& g, const DemandProfile& demand, long horizon,
               const TrafficState& initial, SplitPolicy* controller, Pricer* pricer) {
  if (horizon < 1) throw Error(ErrorCode::InvalidArgument, "horizon must be at least one step");
  Simulation sim(g, demand, initial, controller, pricer);
  sim.advance(horizon);
  return sim.release();
}

double realized_speed(double vehicles, double outflow, const LinkGeometry& link,
                      double timestep_hours) {
  if (!(vehicles > 0.0)) return link.freeflow_mph;
  const double u = outflow * link.length_miles / (vehicles * timestep_hours);
  return std::min(u, link.freeflow_mph);
}

double group_lanes(const Trajectory& t, const FreewayGeometry& g, int group, int link) {
  return g.link(link).lanes * t.group_shares.at(idx(group));
}

MetricsReport metrics(const Trajectory& traj, const FreewayGeometry& g) {
  if (traj.flows.empty() || traj.states.size() < traj.flows.size()) {
    throw Error(ErrorCode::InvalidArgument, "metrics need a nonempty trajectory");
  }
  const double tau = g.timestep_hours;
  const int exit = g.exit_index();
  const int groups = static_cast<int>(traj.group_shares.size());
  const std::size_t horizon = traj.flows.size();
  MetricsReport rep;
  rep.groups.assign(idx(groups), TravelMetrics{});
  rep.density_vpmpl.assign(idx(groups), std::vector<std::vector<double>>(horizon));
  rep.speed_mph.assign(idx(groups), std::vector<std::vector<double>>(horizon));

  for (std::size_t t = 0; t < horizon; ++t) {
    const TrafficState& s = traj.states[t];
    const StepFlows& fl = traj.flows[t];
    for (int grp = 0; grp < groups; ++grp) {
      auto& m = rep.groups[idx(grp)];
      auto& dens = rep.density_vpmpl[idx(grp)][t];
      auto& speed = rep.speed_mph[idx(grp)][t];
      dens.reserve(idx(exit - 1));
      speed.reserve(idx(exit - 1));
      for (int i = 1; i <= exit; ++i) {
        const auto& link = g.link(i);
        const double n = s.vehicles[idx(grp)][idx(i)];
        const double out = fl.outflow(grp, i);
        const double u = realized_speed(n, out, link, tau);
        m.vmt += out * link.length_miles;
        m.vht += tau * n;
        m.delay += tau * n * std::max(0.0, 1.0 - u / link.freeflow_mph);
        if (i < exit) {
          dens.push_back(n / (link.length_miles * group_lanes(traj, g, grp, i)));
          speed.push_back(u);
        }
      }
    }
    double waiting = s.entrance_queue;
    for (double q : s.ramp_queues) waiting += q;
    rep.queues.vht += tau * waiting;
    rep.queues.delay += tau * waiting;
  }
  rep.total = rep.queues;
  for (const auto& m : rep.groups) {
    rep.total.vmt += m.vmt;
    rep.total.vht += m.vht;
    rep.total.delay += m.delay;
  }
  return rep;
}

OfframpFreeSystem transform_remove_offramps(const FreewayGeometry& g, const TrafficState& s) {
  const std::size_t n = g.links.size();
  check_state_shape(s, 1, n);
  OfframpFreeSystem out{g, s, std::vector<double>(n, 1.0)};
  for (std::size_t i = 2; i < n; ++i) {
    const double beta = g.links[i - 1].ramp.split_through();
    if (!(beta > 0.0)) throw Error(ErrorCode::InvalidArgument, "through split ratio must be > 0");
    out.scale[i] = out.scale[i - 1] / beta;
  }
  for (std::size_t i = 1; i < n; ++i) {
    const double mu = out.scale[i];
    const double mu_next = mu / g.links[i].ramp.split_through();
    auto& link = out.geometry.links[i];
    link.fd.capacity *= mu;
    link.fd.jam *= mu;
    link.inflow_capacity *= mu;
    link.outflow_capacity *= mu_next;
    link.ramp.on_capacity *= mu;
    link.ramp.off_capacity = 0.0;
    link.ramp.split_off = 0.0;
    out.state.vehicles[0][i] *= mu;
    out.state.ramp_queues[i] *= mu;
  }
  return out;
}

}  // namespace tollane

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

#include "tollane/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace tollane {

namespace {

constexpr double kTol = 1e-12;

std::string link_label(int link) {
  return link < 0 ? std::string("link") : "link " + std::to_string(link);
}

}  // namespace

CflViolation::CflViolation(int link, double speed, double max_timestep_hours)
    : Error(ErrorCode::CflViolation,
            link_label(link) + ": normalized speed " + std::to_string(speed) +
                " exceeds 1 link/step; maximum admissible time step is " +
                std::to_string(max_timestep_hours * 3600.0) + " s"),
      link_(link),
      speed_(speed),
      max_timestep_hours_(max_timestep_hours) {}

FundamentalDiagram normalize(const RawLinkSpec& spec, double timestep_hours, int link) {
  if (!(timestep_hours > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "time step must be positive");
  }
  if (!(spec.length_miles > 0.0) || spec.lanes <= 0 || !(spec.freeflow_mph > 0.0) ||
      !(spec.congestion_mph > 0.0) || !(spec.capacity_vphpl > 0.0) || !(spec.jam_vpmpl > 0.0)) {
    throw Error(ErrorCode::InvalidArgument,
                link_label(link) + ": all link parameters must be strictly positive");
  }
  FundamentalDiagram fd;
  fd.freeflow = spec.freeflow_mph * timestep_hours / spec.length_miles;
  fd.congestion = spec.congestion_mph * timestep_hours / spec.length_miles;
  fd.capacity = spec.capacity_vphpl * spec.lanes * timestep_hours;
  fd.jam = spec.jam_vpmpl * spec.length_miles * spec.lanes;
  const double fastest = std::max(fd.freeflow, fd.congestion);
  if (fastest > 1.0) {
    throw CflViolation(link, fastest,
                       spec.length_miles / std::max(spec.freeflow_mph, spec.congestion_mph));
  }
  return fd;
}

RawLinkSpec denormalize(const FundamentalDiagram& fd, double length_miles, int lanes,
                        double timestep_hours) {
  RawLinkSpec spec;
  spec.length_miles = length_miles;
  spec.lanes = lanes;
  spec.freeflow_mph = fd.freeflow * length_miles / timestep_hours;
  spec.congestion_mph = fd.congestion * length_miles / timestep_hours;
  spec.capacity_vphpl = fd.capacity / (lanes * timestep_hours);
  spec.jam_vpmpl = fd.jam / (length_miles * lanes);
  return spec;
}

double max_timestep(std::span<const RawLinkSpec> specs) {
  if (specs.empty()) {
    throw Error(ErrorCode::InvalidArgument, "max_timestep needs at least one link");
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : specs) {
    best = std::min(best, s.length_miles / std::max(s.freeflow_mph, s.congestion_mph));
  }
  return best;
}

RampSpec normalize_ramp(const RawRampSpec& spec, double timestep_hours, int link) {
  if (spec.on_capacity_vph < 0.0 || spec.off_capacity_vph < 0.0) {
    throw Error(ErrorCode::InvalidArgument, link_label(link) + ": ramp capacities must be >= 0");
  }
  if (spec.split_off < 0.0 || spec.split_off >= 1.0) {
    throw Error(ErrorCode::InvalidArgument,
                link_label(link) + ": off-ramp split ratio must lie in [0, 1)");
  }
  RampSpec ramp;
  ramp.on_capacity = spec.on_capacity_vph * timestep_hours;
  ramp.off_capacity = spec.off_capacity_vph * timestep_hours;
  ramp.split_off = spec.split_off;
  if (ramp.has_on_ramp()) {
    if (!(spec.on_freeflow_mph > 0.0) || !(spec.on_length_miles > 0.0)) {
      throw Error(ErrorCode::InvalidArgument,
                  link_label(link) + ": on-ramp needs positive speed and length");
    }
    ramp.on_freeflow = spec.on_freeflow_mph * timestep_hours / spec.on_length_miles;
    if (ramp.on_freeflow > 1.0) {
      throw CflViolation(link, ramp.on_freeflow, spec.on_length_miles / spec.on_freeflow_mph);
    }
  }
  if (ramp.has_off_ramp() && !(ramp.off_capacity > 0.0)) {
    throw Error(ErrorCode::InvalidArgument,
                link_label(link) + ": off-ramp with positive split needs positive capacity");
  }
  return ramp;
}

double outflow_capacity(double capacity, const RampSpec& ramp) {
  if (ramp.split_off <= 0.0) return capacity;
  return ramp.split_through() * std::min(capacity, ramp.off_capacity / ramp.split_off);
}

FreewayGeometry build_geometry(const RawLinkSpec& entrance, std::span<const RawLinkSpec> chain,
                               std::span<const RawRampSpec> ramps, double timestep_hours,
                               PriorityMode mode) {
  if (chain.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "a freeway needs at least one mainline link and an exit");
  }
  if (ramps.size() + 1 != chain.size()) {
    throw Error(ErrorCode::InvalidArgument, "expected one ramp entry per mainline link");
  }
  if (!(timestep_hours > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "time step must be positive");
  }
  FreewayGeometry g;
  g.timestep_hours = timestep_hours;
  g.priority_mode = mode;
  g.links.resize(chain.size() + 1);

  // The entrance only needs a capacity and a free-flow speed.
  {
    if (!(entrance.length_miles > 0.0) || entrance.lanes <= 0 || !(entrance.freeflow_mph > 0.0) ||
        !(entrance.capacity_vphpl > 0.0)) {
      throw Error(ErrorCode::InvalidArgument,
                  "entrance needs positive length, lanes, free-flow speed and capacity");
    }
    auto& e = g.links[0];
    e.length_miles = entrance.length_miles;
    e.lanes = entrance.lanes;
    e.freeflow_mph = entrance.freeflow_mph;
    e.fd.capacity = entrance.capacity_vphpl * entrance.lanes * timestep_hours;
    e.fd.freeflow = entrance.freeflow_mph * timestep_hours / entrance.length_miles;
    if (e.fd.freeflow > 1.0) {
      throw CflViolation(0, e.fd.freeflow, entrance.length_miles / entrance.freeflow_mph);
    }
    e.outflow_capacity = e.fd.capacity;
    e.inflow_capacity = e.fd.capacity;
  }

  for (std::size_t k = 0; k < chain.size(); ++k) {
    const int i = static_cast<int>(k) + 1;
    auto& link = g.links[k + 1];
    link.length_miles = chain[k].length_miles;
    link.lanes = chain[k].lanes;
    link.freeflow_mph = chain[k].freeflow_mph;
    link.fd = normalize(chain[k], timestep_hours, i);
    if (k < ramps.size()) link.ramp = normalize_ramp(ramps[k], timestep_hours, i);
    link.outflow_capacity = outflow_capacity(link.fd.capacity, link.ramp);
    link.inflow_capacity = link.fd.capacity;
  }

  // Node i joins link i-1 and on-ramp i into link i.
  for (std::size_t i = 1; i < g.links.size(); ++i) {
    auto& up = g.links[i - 1];
    auto& down = g.links[i];
    const std::optional<double> fixed = (i <= ramps.size()) ? ramps[i - 1].priority : std::nullopt;
    if (fixed) {
      if (*fixed < 0.0 || *fixed > 1.0) {
        throw Error(ErrorCode::InvalidArgument,
                    "link " + std::to_string(i) + ": ramp priority must lie in [0, 1]");
      }
      down.ramp_priority = *fixed;
      up.mainline_priority = 1.0 - *fixed;
    } else {
      const double total = up.outflow_capacity + down.ramp.on_capacity;
      down.ramp_priority = down.ramp.on_capacity / total;
      up.mainline_priority = up.outflow_capacity / total;
    }
  }
  return g;
}

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  for (const auto& v : violations) {
    os << "link " << v.link << " [" << v.kind << "]: " << v.message << '\n';
  }
  return os.str();
}

ValidationReport validate_geometry(const FreewayGeometry& g) {
  ValidationReport report;
  auto fail = [&](int link, const char* kind, std::string message) {
    report.violations.push_back({link, kind, std::move(message)});
  };
  if (g.links.size() < 3) {
    fail(0, "structure", "need an entrance, at least one mainline link and an exit");
    return report;
  }
  const auto& entrance = g.links[0];
  if (!(entrance.fd.capacity > 0.0)) fail(0, "capacity", "entrance capacity must be positive");
  if (!(entrance.fd.freeflow > 0.0) || entrance.fd.freeflow > 1.0) {
    fail(0, "speed", "entrance free-flow speed must lie in (0, 1]");
  }

  for (int i = 1; i <= g.exit_index(); ++i) {
    const auto& link = g.link(i);
    const auto& fd = link.fd;
    if (!(fd.capacity > 0.0) || !(fd.jam > 0.0)) {
      fail(i, "capacity", "capacity and jam storage must be positive");
      continue;
    }
    if (!(fd.freeflow > 0.0) || fd.freeflow > 1.0 || !(fd.congestion > 0.0) ||
        fd.congestion > 1.0) {
      fail(i, "speed", "normalized speeds must lie in (0, 1]");
      continue;
    }
    const double lhs = fd.capacity / fd.freeflow + fd.capacity / fd.congestion;
    if (lhs > fd.jam * (1.0 + kTol)) {
      std::ostringstream os;
      os << "F/v + F/w = " << lhs << " exceeds jam storage N = " << fd.jam;
      fail(i, "freeflow-noconstraint", os.str());
    }
    const auto& ramp = link.ramp;
    if (ramp.split_off < 0.0 || ramp.split_off >= 1.0) {
      fail(i, "split", "off-ramp split must lie in [0, 1)");
    }
    if (ramp.on_capacity < 0.0 || ramp.off_capacity < 0.0) {
      fail(i, "ramp", "ramp capacities must be nonnegative");
    }
    if (ramp.has_on_ramp() && (!(ramp.on_freeflow > 0.0) || ramp.on_freeflow > 1.0)) {
      fail(i, "speed", "on-ramp free-flow speed must lie in (0, 1]");
    }
    if (i == g.exit_index() && (ramp.has_on_ramp() || ramp.has_off_ramp())) {
      fail(i, "structure", "the exit link carries no ramps");
    }
    const double expected_out = outflow_capacity(fd.capacity, ramp);
    if (std::abs(link.outflow_capacity - expected_out) > kTol * std::max(1.0, expected_out)) {
      fail(i, "outflow-capacity", "F^d does not match the off-ramp capacity rule");
    }
    if (std::abs(link.inflow_capacity - fd.capacity) > kTol * std::max(1.0, fd.capacity)) {
      fail(i, "inflow-capacity", "F^s must equal the link capacity");
    }
  }

  for (int i = 1; i <= g.exit_index(); ++i) {
    const double pf = g.link(i - 1).mainline_priority;
    const double pr = g.link(i).ramp_priority;
    if (pf < 0.0 || pr < 0.0) {
      fail(i, "priority", "priorities must be nonnegative");
    } else if (std::abs(pf + pr - 1.0) > kTol) {
      std::ostringstream os;
      os << "p^f(" << i - 1 << ") + p^r(" << i << ") = " << pf + pr << ", expected 1";
      fail(i, "priority", os.str());
    }
  }
  return report;
}

double DualGeometry::share(int group) const {
  const double total = static_cast<double>(toll_lanes + general_lanes);
  return (group == kTollGroup ? toll_lanes : general_lanes) / total;
}

std::vector<int> DualGeometry::entrance_links() const {
  std::vector<int> out;
  for (int i = 1; i <= mainline_count(); ++i) {
    if (entrances[static_cast<std::size_t>(i)].has_on_ramp()) out.push_back(i);
  }
  return out;
}

DualGeometry split_lanes(const FreewayGeometry& g, int toll_lanes, int general_lanes) {
  if (toll_lanes < 1 || general_lanes < 1) {
    throw Error(ErrorCode::InvalidArgument, "both lane groups need at least one lane");
  }
  if (g.links.size() < 3) {
    throw Error(ErrorCode::InvalidArgument, "geometry has no mainline links");
  }
  if (g.link(1).ramp.has_on_ramp()) {
    throw Error(ErrorCode::Validation,
                "link 1 cannot carry an on-ramp in lane-split mode: the freeway entrance is "
                "its on-ramp");
  }
  DualGeometry d;
  d.base = g;
  d.toll_lanes = toll_lanes;
  d.general_lanes = general_lanes;
  const std::size_t n = g.links.size();
  for (int grp = 0; grp < 2; ++grp) {
    const double s = d.share(grp);
    auto& out = d.groups[static_cast<std::size_t>(grp)];
    out.resize(n);
    for (std::size_t i = 1; i < n; ++i) {
      const auto& link = g.links[i];
      out[i].capacity = link.fd.capacity * s;
      out[i].jam = link.fd.jam * s;
      out[i].outflow_capacity = link.outflow_capacity * s;
      out[i].inflow_capacity = link.inflow_capacity * s;
      out[i].mainline_priority = link.mainline_priority * s;
    }
    // Link 0 no longer exists as a mainline link.
    out[0] = LaneGroupLink{};
  }
  d.entrances.resize(n);
  d.entrance_priority.assign(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    d.entrances[i] = g.links[i].ramp;
    d.entrance_priority[i] = g.links[i].ramp_priority;
  }
  d.entrances[1].on_capacity = g.links[0].fd.capacity;
  d.entrances[1].on_freeflow = g.links[0].fd.freeflow;
  d.entrance_priority[1] = 1.0;
  return d;
}

}  // namespace tollane

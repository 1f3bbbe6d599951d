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

// Freeway geometry in normalized (per-time-step) units.
//
// Link indexing follows the usual chain layout: link 0 is the entrance,
// links 1..K are mainline links and link K+1 is the exit. Flow quantities are
// vehicles per step, speeds are links per step, storage is vehicles.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tollane/errors.hpp"

namespace tollane {

/// Link description in field units.
struct RawLinkSpec {
  double length_miles = 0.0;
  int lanes = 0;
  double freeflow_mph = 0.0;
  double congestion_mph = 0.0;
  double capacity_vphpl = 0.0;
  double jam_vpmpl = 0.0;
};

struct FundamentalDiagram {
  double capacity = 0.0;    // vehicles per step
  double jam = 0.0;         // maximum vehicles in the link
  double freeflow = 0.0;    // links per step
  double congestion = 0.0;  // links per step
};

/// Converts field units to model units for time step `timestep_hours`.
/// Throws CflViolation when either speed exceeds one link per step.
FundamentalDiagram normalize(const RawLinkSpec& spec, double timestep_hours, int link = -1);

/// Inverse of normalize() for a link of known length and lane count.
RawLinkSpec denormalize(const FundamentalDiagram& fd, double length_miles, int lanes,
                        double timestep_hours);

/// Largest time step (hours) satisfying the CFL condition on every link.
double max_timestep(std::span<const RawLinkSpec> specs);

/// On-ramp and off-ramp attached to a mainline link, in field units.
struct RawRampSpec {
  double on_capacity_vph = 0.0;
  double on_freeflow_mph = 0.0;
  double on_length_miles = 0.0;
  double off_capacity_vph = 0.0;
  double split_off = 0.0;
  std::optional<double> priority;  // explicit on-ramp priority p^r
};

struct RampSpec {
  double on_capacity = 0.0;   // R, vehicles per step; 0 means no on-ramp
  double on_freeflow = 1.0;   // v^r, links per step
  double off_capacity = 0.0;  // S, vehicles per step
  double split_off = 0.0;     // beta^s

  double split_through() const { return 1.0 - split_off; }
  bool has_on_ramp() const { return on_capacity > 0.0; }
  bool has_off_ramp() const { return split_off > 0.0; }
};

RampSpec normalize_ramp(const RawRampSpec& spec, double timestep_hours, int link = -1);

/// Outflow capacity F^d: the largest flow to the next mainline link that
/// keeps the proportional off-ramp flow within the off-ramp capacity.
double outflow_capacity(double capacity, const RampSpec& ramp);

enum class PriorityMode { Capacity, Demand };

struct LinkGeometry {
  double length_miles = 0.0;
  int lanes = 0;
  double freeflow_mph = 0.0;
  FundamentalDiagram fd;
  RampSpec ramp;
  double outflow_capacity = 0.0;   // F^d
  double inflow_capacity = 0.0;    // F^s
  double mainline_priority = 1.0;  // p^f of this link at its downstream node
  double ramp_priority = 0.0;      // p^r of this link's on-ramp
};

struct FreewayGeometry {
  std::vector<LinkGeometry> links;  // 0..K+1
  double timestep_hours = 0.0;
  PriorityMode priority_mode = PriorityMode::Capacity;

  int mainline_count() const { return static_cast<int>(links.size()) - 2; }
  int exit_index() const { return static_cast<int>(links.size()) - 1; }
  const LinkGeometry& link(int i) const { return links.at(static_cast<std::size_t>(i)); }
  double split_through(int i) const { return link(i).ramp.split_through(); }
};

/// Builds a geometry from field specs. `chain` holds links 1..K+1 (the last
/// entry is the exit link); `ramps` holds one entry per mainline link 1..K.
/// Default priorities are proportional to outflow/on-ramp capacities and
/// normalized at each node; an explicit ramp priority overrides that node.
FreewayGeometry build_geometry(const RawLinkSpec& entrance, std::span<const RawLinkSpec> chain,
                               std::span<const RawRampSpec> ramps, double timestep_hours,
                               PriorityMode mode = PriorityMode::Capacity);

struct GeometryViolation {
  int link = 0;
  std::string kind;
  std::string message;
};

struct ValidationReport {
  std::vector<GeometryViolation> violations;
  bool ok() const { return violations.empty(); }
  std::string to_string() const;
};

ValidationReport validate_geometry(const FreewayGeometry& g);

inline constexpr int kTollGroup = 0;
inline constexpr int kGeneralGroup = 1;

/// One lane group's share of a mainline link.
struct LaneGroupLink {
  double capacity = 0.0;
  double jam = 0.0;
  double outflow_capacity = 0.0;
  double inflow_capacity = 0.0;
  double mainline_priority = 0.0;
};

/// Freeway split into a toll lane group (index 0) and a general-purpose lane
/// group (index 1). Travelers choose a lane group only when entering, so the
/// entrance is folded into link 1 as its on-ramp.
struct DualGeometry {
  FreewayGeometry base;
  int toll_lanes = 1;
  int general_lanes = 1;
  std::array<std::vector<LaneGroupLink>, 2> groups;
  std::vector<RampSpec> entrances;       // per link; index 1 carries the freeway entrance
  std::vector<double> entrance_priority;  // p^r per link

  int mainline_count() const { return base.mainline_count(); }
  int exit_index() const { return base.exit_index(); }
  double share(int group) const;
  const LaneGroupLink& group_link(int group, int i) const {
    return groups.at(static_cast<std::size_t>(group)).at(static_cast<std::size_t>(i));
  }
  /// Links carrying an on-ramp, in increasing order; the first is always 1.
  std::vector<int> entrance_links() const;
};

/// Splits every mainline link into two parallel lane groups proportional to
/// the lane counts. Requires link 1 to have no on-ramp of its own.
DualGeometry split_lanes(const FreewayGeometry& g, int toll_lanes, int general_lanes);

}  // namespace tollane

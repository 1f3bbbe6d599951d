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

// Corridor builders shared by the unit and acceptance tests. Raw specs with
// a one-hour step, one-mile links and one lane map one-to-one onto model
// units, so tests can state capacities and speeds directly.

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include "tollane/core.hpp"
#include "tollane/sim.hpp"

namespace testsupport {

using namespace tollane;

struct ModelLink {
  double capacity = 10.0;
  double jam = 40.0;
  double freeflow = 1.0;
  double congestion = 0.5;
  double on_capacity = 0.0;
  double on_freeflow = 1.0;
  double off_capacity = 0.0;
  double split_off = 0.0;
  std::optional<double> ramp_priority;
};

inline RawLinkSpec raw(const ModelLink& m) {
  RawLinkSpec r;
  r.length_miles = 1.0;
  r.lanes = 1;
  r.freeflow_mph = m.freeflow;
  r.congestion_mph = m.congestion;
  r.capacity_vphpl = m.capacity;
  r.jam_vpmpl = m.jam;
  return r;
}

/// `links` holds 1..K+1 (last is the exit); ramps on the exit are ignored.
inline FreewayGeometry corridor(double entrance_capacity, double entrance_freeflow,
                                const std::vector<ModelLink>& links,
                                PriorityMode mode = PriorityMode::Capacity) {
  RawLinkSpec entrance;
  entrance.length_miles = 1.0;
  entrance.lanes = 1;
  entrance.freeflow_mph = entrance_freeflow;
  entrance.congestion_mph = entrance_freeflow;
  entrance.capacity_vphpl = entrance_capacity;
  entrance.jam_vpmpl = 1.0;
  std::vector<RawLinkSpec> chain;
  std::vector<RawRampSpec> ramps;
  for (std::size_t i = 0; i < links.size(); ++i) {
    chain.push_back(raw(links[i]));
    if (i + 1 < links.size()) {
      RawRampSpec r;
      r.on_capacity_vph = links[i].on_capacity;
      r.on_freeflow_mph = links[i].on_freeflow;
      r.on_length_miles = 1.0;
      r.off_capacity_vph = links[i].off_capacity;
      r.split_off = links[i].split_off;
      r.priority = links[i].ramp_priority;
      ramps.push_back(r);
    }
  }
  return build_geometry(entrance, chain, ramps, 1.0, mode);
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

/// Random admissible link in model units.
inline ModelLink random_link(std::mt19937_64& rng) {
  ModelLink m;
  m.capacity = uniform(rng, 4.0, 16.0);
  m.freeflow = uniform(rng, 0.3, 1.0);
  m.congestion = uniform(rng, 0.2, 1.0);
  m.jam = (m.capacity / m.freeflow + m.capacity / m.congestion) * uniform(rng, 1.05, 1.6);
  return m;
}

struct RandomCorridor {
  FreewayGeometry geometry;
  double entrance_flow = 0.0;
  std::vector<double> ramp_demands;  // 0..K+1
};

struct CorridorOptions {
  int max_links = 8;
  bool ramps = true;
  bool offramps = true;
  bool first_link_ramp = true;  // false for lane-split corridors
};

inline RandomCorridor random_corridor(std::mt19937_64& rng, const CorridorOptions& o = {}) {
  RandomCorridor c;
  const int k = uniform_int(rng, 1, o.max_links);
  std::vector<ModelLink> links;
  for (int i = 1; i <= k + 1; ++i) {
    ModelLink m = random_link(rng);
    const bool ramp_allowed = i <= k && (o.first_link_ramp || i > 1);
    if (o.ramps && ramp_allowed && uniform(rng, 0.0, 1.0) < 0.4) {
      m.on_capacity = uniform(rng, 1.0, 6.0);
      m.on_freeflow = uniform(rng, 0.3, 1.0);
    }
    if (o.offramps && i <= k && uniform(rng, 0.0, 1.0) < 0.3) {
      m.split_off = uniform(rng, 0.05, 0.3);
      m.off_capacity = uniform(rng, 0.5, 4.0);
    }
    links.push_back(m);
  }
  c.geometry = corridor(uniform(rng, 6.0, 16.0), uniform(rng, 0.4, 1.0), links);
  c.entrance_flow = uniform(rng, 0.0, 14.0);
  c.ramp_demands.assign(static_cast<std::size_t>(k + 2), 0.0);
  for (int i = 1; i <= k; ++i) {
    if (c.geometry.link(i).ramp.has_on_ramp()) {
      c.ramp_demands[static_cast<std::size_t>(i)] = uniform(rng, 0.0, 5.0);
    }
  }
  return c;
}

inline DemandProfile constant_demand(double entrance, const std::vector<double>& ramps) {
  DemandProfile d;
  d.entrance = StepSeries(entrance);
  for (double r : ramps) d.ramps.push_back(StepSeries(r));
  return d;
}

/// Random state with every link between empty and jammed.
inline TrafficState random_state(std::mt19937_64& rng, const FreewayGeometry& g) {
  TrafficState s = empty_state(g);
  for (int i = 1; i <= g.exit_index(); ++i) {
    s.vehicles[0][static_cast<std::size_t>(i)] = uniform(rng, 0.0, g.link(i).fd.jam);
  }
  for (int i = 1; i <= g.mainline_count(); ++i) {
    if (g.link(i).ramp.has_on_ramp()) {
      s.ramp_queues[static_cast<std::size_t>(i)] = uniform(rng, 0.0, 20.0);
    }
  }
  s.entrance_queue = uniform(rng, 0.0, 20.0);
  return s;
}

inline TrafficState random_state(std::mt19937_64& rng, const DualGeometry& g) {
  TrafficState s = empty_state(g);
  for (int grp = 0; grp < 2; ++grp) {
    for (int i = 1; i <= g.exit_index(); ++i) {
      s.vehicles[static_cast<std::size_t>(grp)][static_cast<std::size_t>(i)] =
          uniform(rng, 0.0, g.group_link(grp, i).jam);
    }
  }
  for (int i = 2; i <= g.mainline_count(); ++i) {
    if (g.entrances[static_cast<std::size_t>(i)].has_on_ramp()) {
      s.ramp_queues[static_cast<std::size_t>(i)] = uniform(rng, 0.0, 20.0);
    }
  }
  s.entrance_queue = uniform(rng, 0.0, 20.0);
  return s;
}

}  // namespace testsupport

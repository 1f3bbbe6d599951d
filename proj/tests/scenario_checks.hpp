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

// Qualitative checks on scenario trajectories shared by the unit and
// acceptance tests.

#include <algorithm>
#include <map>
#include <utility>
#include <vector>

#include "tollane/scenario.hpp"

namespace testsupport {

/// Lane group above its critical density on `link`.
inline bool congested(const tollane::Scenario& s, const tollane::TrafficState& st, int group,
                      int link) {
  const auto& gl = s.dual->group_link(group, link);
  const double critical = gl.capacity / s.geometry.link(link).fd.freeflow;
  return st.vehicles[static_cast<std::size_t>(group)][static_cast<std::size_t>(link)] >
         critical + 1e-6;
}

inline std::vector<int> congested_links(const tollane::Scenario& s, const tollane::TrafficState& st,
                                        int group) {
  std::vector<int> out;
  for (int i = 1; i <= s.geometry.mainline_count(); ++i) {
    if (congested(s, st, group, i)) out.push_back(i);
  }
  return out;
}

/// First state index from which the group stays uncongested on links 1..K;
/// the trajectory length if it never clears.
inline long clear_step(const tollane::Scenario& s, const tollane::Trajectory& t, int group) {
  long k = static_cast<long>(t.states.size());
  while (k > 0 && congested_links(s, t.states[static_cast<std::size_t>(k - 1)], group).empty()) {
    --k;
  }
  return k;
}

inline bool ever_congested(const tollane::Scenario& s, const tollane::Trajectory& t, int group) {
  for (const auto& st : t.states) {
    if (!congested_links(s, st, group).empty()) return true;
  }
  return false;
}

/// Range of realized toll-lane shares per entrance link.
inline std::map<int, std::pair<double, double>> share_ranges(const tollane::Trajectory& t) {
  std::map<int, std::pair<double, double>> out;
  for (const auto& e : t.entrance_log) {
    auto [it, fresh] = out.try_emplace(e.link, e.toll_share, e.toll_share);
    if (!fresh) {
      it->second.first = std::min(it->second.first, e.toll_share);
      it->second.second = std::max(it->second.second, e.toll_share);
    }
  }
  return out;
}

}  // namespace testsupport

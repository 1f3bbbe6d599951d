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

#include <cmath>
#include <random>

#include "doctest.h"
#include "support.hpp"
#include "tollane/equilibrium.hpp"
#include "tollane/errors.hpp"

using namespace tollane;
using namespace testsupport;
using doctest::Approx;

namespace {

double max_gap(const TrafficState& a, const TrafficState& b) {
  double m = 0.0;
  for (std::size_t i = 1; i < a.vehicles[0].size(); ++i) {
    m = std::max(m, std::abs(a.vehicles[0][i] - b.vehicles[0][i]));
  }
  return m;
}

// Long simulation from the empty state; returns the last step's flows.
StepFlows settle(const FreewayGeometry& g, double entrance, const std::vector<double>& d) {
  TrafficState s = empty_state(g);
  StepFlows last;
  for (int k = 0; k < 4000; ++k) {
    auto r = step(s, g, entrance, d);
    s = std::move(r.state);
    last = std::move(r.flows);
  }
  return last;
}

ModelLink cap(double c) {
  ModelLink m;
  m.capacity = c;
  m.jam = 3.0 * c + 10.0;
  return m;
}

}  // namespace

TEST_SUITE("equilibrium") {
  TEST_CASE("maximum flows") {
    ModelLink a = cap(10.0);
    a.on_capacity = 3.0;
    const auto g = corridor(15.0, 1.0, {a, cap(8.0), cap(20.0)});
    const auto mf = max_flows(g, 20.0, {0.0, 5.0});
    CHECK(mf.mainline[0] == Approx(15.0));
    CHECK(mf.ramp[1] == Approx(3.0));
    CHECK(mf.mainline[1] == Approx(10.0));
    CHECK(mf.mainline[2] == Approx(8.0));
    CHECK(mf.mainline[3] == Approx(8.0));
  }

  TEST_CASE("bottleneck without ramps") {
    const auto g = corridor(20.0, 1.0, {cap(8.0), cap(20.0)});
    const auto mf = max_flows(g, 10.0, {});
    const auto eq = equilibrium_flows(g, mf);
    CHECK(eq.mainline[1] == Approx(8.0));
    CHECK(eq.mainline[0] == Approx(8.0));
    const auto sim = settle(g, 10.0, {});
    CHECK(sim.mainline[0][0] == Approx(8.0));
    CHECK(sim.mainline[0][1] == Approx(8.0));
  }

  TEST_CASE("proportional case at a ramp merge") {
    ModelLink a = cap(12.0);
    a.on_capacity = 6.0;
    a.ramp_priority = 0.2;
    const auto g = corridor(10.0, 1.0, {a, cap(12.0)});
    const std::vector<double> d{0.0, 6.0};
    const auto mf = max_flows(g, 10.0, d);
    const auto eq = equilibrium_flows(g, mf);
    CHECK(eq.mainline[1] == Approx(12.0));
    CHECK(eq.mainline[0] == Approx(9.6));
    CHECK(eq.ramp[1] == Approx(2.4));
    CHECK(eq.cases[1] == NodeCase::Proportional);
    const auto sim = settle(g, 10.0, d);
    CHECK(sim.mainline[0][0] == Approx(9.6));
    CHECK(sim.ramp[0][1] == Approx(2.4));
  }

  TEST_CASE("feasibility classes") {
    ModelLink a = cap(12.0);
    a.on_capacity = 6.0;
    const auto g = corridor(20.0, 1.0, {a, cap(20.0)});
    CHECK(classify(g, 4.0, {0.0, 3.0}) == FeasibilityClass::StrictlyFeasible);
    CHECK(classify(g, 6.0, {0.0, 6.0}) == FeasibilityClass::Feasible);
    CHECK(classify(g, 10.0, {0.0, 6.0}) == FeasibilityClass::Infeasible);
    CHECK(std::string(to_string(FeasibilityClass::Infeasible)) == "infeasible");
  }

  TEST_CASE("strictly feasible demand has flows at their maxima and a single density vector") {
    std::mt19937_64 rng(17);
    int seen = 0;
    while (seen < 40) {
      auto c = random_corridor(rng);
      if (classify(c.geometry, c.entrance_flow, c.ramp_demands) !=
          FeasibilityClass::StrictlyFeasible) {
        continue;
      }
      ++seen;
      const auto r = analyze_equilibrium(c.geometry, c.entrance_flow, c.ramp_demands);
      for (std::size_t i = 0; i < r.flows.mainline.size(); ++i) {
        CHECK(r.flows.mainline[i] == Approx(r.max.mainline[i]).epsilon(1e-12));
        CHECK(r.flows.ramp[i] == Approx(r.max.ramp[i]).epsilon(1e-12));
      }
      CHECK(r.densities.single_vector());
      const auto n = density_member(r.densities, {}, {});
      for (std::size_t i = 1; i < n.size(); ++i) {
        CHECK(n[i] == Approx(r.densities.uncongested[i]));
      }
      CHECK(is_equilibrium(c.geometry, r.max, r.flows, n));
      auto bumped = n;
      bumped[1] += 10.0;
      CHECK_FALSE(contains(r.densities, bumped));
      CHECK_FALSE(is_equilibrium(c.geometry, r.max, r.flows, bumped));
    }
  }

  TEST_CASE("bottleneck at link 2 splits the chain") {
    ModelLink two = cap(12.0);
    two.split_off = 0.5;
    two.off_capacity = 4.0;
    const auto g = corridor(20.0, 1.0, {cap(12.0), two, cap(12.0), cap(12.0)});
    const auto r = analyze_equilibrium(g, 10.0, {});
    CHECK(r.flows.mainline[2] == Approx(g.link(2).outflow_capacity));
    CHECK(r.densities.bottlenecks == std::vector<int>{2});
    REQUIRE(r.densities.segments.size() == 2);
    CHECK(r.densities.segments[0].first == 1);
    CHECK(r.densities.segments[0].last == 2);
    CHECK(r.densities.segments[1].first == 3);
    CHECK(r.densities.segments[1].last == 4);
  }

  TEST_CASE("members of the density set are fixed points of the step") {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 200; ++trial) {
      auto c = random_corridor(rng, {6, true, true, true});
      const auto r = analyze_equilibrium(c.geometry, c.entrance_flow, c.ramp_demands);
      if (!r.densities.near_degenerate.empty()) continue;
      std::vector<int> free;
      std::vector<double> pos;
      for (const auto& s : r.densities.segments) {
        free.push_back(s.single() ? 0 : uniform_int(rng, s.family_begin(), s.family_end()));
        pos.push_back(uniform(rng, 0.0, 1.0));
      }
      const auto n = density_member(r.densities, free, pos);
      CHECK(contains(r.densities, n));
      const TrafficState s = equilibrium_state(c.geometry, r.max, n);
      const TrafficState next = step(s, c.geometry, c.entrance_flow, c.ramp_demands).state;
      CHECK(max_gap(s, next) <= 1e-9);
      CHECK(is_equilibrium(c.geometry, r.max, r.flows, n));
    }
  }

  TEST_CASE("zero demand leaves an empty freeway") {
    std::mt19937_64 rng(2);
    auto c = random_corridor(rng);
    std::fill(c.ramp_demands.begin(), c.ramp_demands.end(), 0.0);
    const auto r = analyze_equilibrium(c.geometry, 0.0, c.ramp_demands);
    CHECK(r.feasibility == FeasibilityClass::StrictlyFeasible);
    for (double v : density_member(r.densities, {}, {})) CHECK(v == 0.0);
  }

  TEST_CASE("member selection is validated") {
    const auto g = corridor(20.0, 1.0, {cap(12.0), cap(12.0), cap(8.0)});
    const auto r = analyze_equilibrium(g, 8.0, {});
    CHECK_THROWS_AS(density_member(r.densities, {}, {}), Error);
    CHECK_THROWS_AS(density_member(r.densities, {5, 0}, {0.5, 0.0}), Error);
    CHECK_NOTHROW(density_member(r.densities, {1, 0}, {0.5, 0.0}));
    CHECK(render(r).find("families h = 1..2") != std::string::npos);
  }
}

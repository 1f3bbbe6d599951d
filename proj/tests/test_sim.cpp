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
#include "tollane/errors.hpp"
#include "tollane/sim.hpp"

using namespace tollane;
using namespace testsupport;
using doctest::Approx;

namespace {

FreewayGeometry simple(double capacity, double freeflow, double congestion, double jam) {
  ModelLink a;
  a.capacity = capacity;
  a.freeflow = freeflow;
  a.congestion = congestion;
  a.jam = jam;
  ModelLink exit;
  exit.capacity = 100.0;
  exit.jam = 400.0;
  return corridor(100.0, 1.0, {a, exit});
}

}  // namespace

TEST_SUITE("sim") {
  TEST_CASE("demand and supply of a link") {
    const auto g = simple(20.0, 0.5, 0.5, 80.0);
    TrafficState s = empty_state(g);
    s.vehicles[0][1] = 10.0;
    const auto sig = demands_supplies(s, g);
    CHECK(sig.sending[0][1] == Approx(5.0));
    ModelLink a;
    a.capacity = 20.0;
    a.jam = 40.0;
    a.congestion = 0.5;
    a.freeflow = 1.0;
    auto h = corridor(100.0, 1.0, {a, a});
    s = empty_state(h);
    s.vehicles[0][1] = 10.0;
    CHECK(demands_supplies(s, h).receiving[0][1] == Approx(15.0));
  }

  TEST_CASE("off-ramp caps the outflow demand") {
    ModelLink a;
    a.capacity = 20.0;
    a.jam = 80.0;
    a.split_off = 0.2;
    a.off_capacity = 2.0;
    const auto g = corridor(100.0, 1.0, {a, ModelLink{}});
    TrafficState s = empty_state(g);
    s.vehicles[0][1] = 30.0;
    CHECK(demands_supplies(s, g).sending[0][1] == Approx(8.0));
  }

  TEST_CASE("vehicle conservation on one link") {
    const auto g = simple(20.0, 0.3, 0.5, 80.0);
    TrafficState s = empty_state(g);
    s.vehicles[0][1] = 10.0;
    s.entrance_queue = 2.0;
    const auto r = step(s, g, 0.0, {});
    CHECK(r.flows.mainline[0][0] == Approx(2.0));
    CHECK(r.flows.mainline[0][1] == Approx(3.0));
    CHECK(r.state.vehicles[0][1] == Approx(9.0));
  }

  TEST_CASE("ramp queue dynamics") {
    ModelLink a;
    a.on_capacity = 1.0;
    const auto g = corridor(10.0, 1.0, {a, ModelLink{}});
    TrafficState s = empty_state(g);
    s.ramp_queues[1] = 5.0;
    std::vector<double> d(g.links.size(), 0.0);
    d[1] = 2.0;
    const auto r = step(s, g, 0.0, d);
    CHECK(r.flows.ramp[0][1] == Approx(1.0));
    CHECK(r.state.ramp_queues[1] == Approx(6.0));
  }

  TEST_CASE("empty freeway without demand is a fixed point") {
    std::mt19937_64 rng(3);
    const auto c = random_corridor(rng);
    const TrafficState s = empty_state(c.geometry);
    const auto r = step(s, c.geometry, 0.0, {});
    CHECK(r.state.vehicles == s.vehicles);
    CHECK(r.state.ramp_queues == s.ramp_queues);
    for (double f : r.flows.mainline[0]) CHECK(f == 0.0);
  }

  TEST_CASE("negative demand and zero horizon are rejected") {
    const auto g = simple(20.0, 1.0, 0.5, 80.0);
    CHECK_THROWS_AS(step(empty_state(g), g, -1.0, {}), Error);
    CHECK_THROWS_AS(run(g, constant_demand(1.0, {}), 0, empty_state(g)), Error);
  }

  TEST_CASE("states above jam storage are reported as corruption") {
    const auto g = simple(20.0, 1.0, 0.5, 80.0);
    TrafficState s = empty_state(g);
    s.vehicles[0][1] = 200.0;
    try {
      step(s, g, 0.0, {});
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK((e.code() == ErrorCode::StateCorruption || e.code() == ErrorCode::InvalidArgument));
    }
  }

  TEST_CASE("constant feasible demand settles into a fixed point") {
    ModelLink a;
    const auto g = corridor(10.0, 1.0, {a, a, a, a});
    const auto traj = run(g, constant_demand(6.0, {}), 40, empty_state(g));
    const auto& last = traj.states.back();
    const auto next = step(last, g, 6.0, {}).state;
    for (std::size_t i = 1; i < g.links.size(); ++i) {
      CHECK(next.vehicles[0][i] == Approx(last.vehicles[0][i]).epsilon(1e-12));
      CHECK(last.vehicles[0][i] == Approx(6.0));
    }
  }

  TEST_CASE("runs are deterministic") {
    std::mt19937_64 rng(5);
    const auto c = random_corridor(rng);
    const auto d = constant_demand(c.entrance_flow, c.ramp_demands);
    const auto a = run(c.geometry, d, 200, empty_state(c.geometry));
    const auto b = run(c.geometry, d, 200, empty_state(c.geometry));
    for (std::size_t t = 0; t < a.states.size(); ++t) {
      CHECK(a.states[t].vehicles == b.states[t].vehicles);
    }
  }

  TEST_CASE("travel metrics") {
    ModelLink a;
    auto g = corridor(10.0, 1.0, {a, a});
    g.links[1].length_miles = 0.5;
    Trajectory t;
    t.group_shares = {1.0};
    for (int k = 0; k < 10; ++k) {
      TrafficState s = empty_state(g);
      s.vehicles[0][1] = 2.5;
      t.states.push_back(s);
      StepFlows f;
      f.mainline.assign(1, std::vector<double>(g.links.size(), 0.0));
      f.ramp = f.mainline;
      f.offramp = f.mainline;
      f.mainline[0][1] = 5.0;
      t.flows.push_back(f);
    }
    t.states.push_back(t.states.back());
    const auto m = metrics(t, g);
    CHECK(m.groups[0].vmt == Approx(25.0));
    CHECK(m.total.delay == Approx(0.0));

    auto stopped = g;
    stopped.timestep_hours = 1.0 / 360.0;
    Trajectory u;
    u.group_shares = {1.0};
    TrafficState s = empty_state(stopped);
    s.vehicles[0][1] = 10.0;
    u.states = {s, s};
    StepFlows f;
    f.mainline.assign(1, std::vector<double>(g.links.size(), 0.0));
    f.ramp = f.mainline;
    f.offramp = f.mainline;
    u.flows = {f};
    CHECK(metrics(u, stopped).total.delay == Approx(10.0 / 360.0));
  }

  TEST_CASE("contour density is vehicles per lane-mile") {
    std::mt19937_64 rng(9);
    CorridorOptions o;
    o.first_link_ramp = false;
    const auto c = random_corridor(rng, o);
    const auto d = split_lanes(c.geometry, 1, 2);
    const auto traj = run(d, constant_demand(c.entrance_flow, c.ramp_demands), 30, random_state(rng, d));
    const auto m = metrics(traj, c.geometry);
    for (int grp = 0; grp < 2; ++grp) {
      for (std::size_t t = 0; t < traj.flows.size(); ++t) {
        for (int i = 1; i < c.geometry.exit_index(); ++i) {
          const auto& link = c.geometry.link(i);
          const double expect = traj.states[t].vehicles[grp][i] /
                                (link.length_miles * link.lanes * d.share(grp));
          CHECK(std::abs(m.density_vpmpl[grp][t][i - 1] - expect) <= 1e-9);
        }
      }
    }
  }

  TEST_CASE("off-ramp removal transform") {
    ModelLink a;
    a.split_off = 0.2;
    a.off_capacity = 5.0;
    ModelLink b;
    const auto g = corridor(10.0, 1.0, {a, b, b});
    TrafficState s = empty_state(g);
    s.vehicles[0][2] = 8.0;
    const auto t = transform_remove_offramps(g, s);
    CHECK(t.scale[1] == Approx(1.0));
    CHECK(t.scale[2] == Approx(1.25));
    CHECK(t.state.vehicles[0][2] == Approx(10.0));

    const auto plain = corridor(10.0, 1.0, {b, b, b});
    const auto id = transform_remove_offramps(plain, empty_state(plain));
    for (double m : id.scale) CHECK(m == 1.0);
  }

  TEST_CASE("transformed system reproduces the scaled trajectory") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<ModelLink> links;
      for (int i = 0; i < 4; ++i) {
        ModelLink m = random_link(rng);
        if (i < 3 && uniform(rng, 0, 1) < 0.6) {
          m.split_off = uniform(rng, 0.05, 0.3);
          m.off_capacity = uniform(rng, 0.5, 4.0);
        }
        if (i < 3 && uniform(rng, 0, 1) < 0.5) m.on_capacity = uniform(rng, 1.0, 4.0);
        links.push_back(m);
      }
      const auto g = corridor(12.0, 1.0, links);
      TrafficState s = random_state(rng, g);
      auto tr = transform_remove_offramps(g, s);
      TrafficState h = tr.state;
      std::vector<double> d(g.links.size(), 0.0);
      std::vector<double> dh = d;
      for (std::size_t i = 1; i + 1 < g.links.size(); ++i) {
        d[i] = g.links[i].ramp.has_on_ramp() ? uniform(rng, 0.0, 4.0) : 0.0;
        dh[i] = d[i] * tr.scale[i];
      }
      const double entrance = uniform(rng, 0.0, 12.0);
      for (int k = 0; k < 20; ++k) {
        s = step(s, g, entrance, d).state;
        h = step(h, tr.geometry, entrance, dh).state;
        for (std::size_t i = 1; i < g.links.size(); ++i) {
          CHECK(std::abs(h.vehicles[0][i] - tr.scale[i] * s.vehicles[0][i]) <= 1e-9);
        }
      }
    }
  }

  TEST_CASE("lane split at lane shares reproduces the single model") {
    std::mt19937_64 rng(33);
    CorridorOptions o;
    o.first_link_ramp = false;
    for (int trial = 0; trial < 50; ++trial) {
      const auto c = random_corridor(rng, o);
      const int l1 = uniform_int(rng, 1, 3);
      const int l2 = uniform_int(rng, 1, 3);
      const auto d = split_lanes(c.geometry, l1, l2);
      TrafficState single = random_state(rng, c.geometry);
      TrafficState dual = empty_state(d);
      for (int grp = 0; grp < 2; ++grp) {
        for (std::size_t i = 1; i < c.geometry.links.size(); ++i) {
          dual.vehicles[grp][i] = single.vehicles[0][i] * d.share(grp);
        }
      }
      dual.ramp_queues = single.ramp_queues;
      dual.entrance_queue = single.entrance_queue;
      const std::vector<double> nan(c.geometry.links.size(), std::nan(""));
      for (int k = 0; k < 30; ++k) {
        single = step(single, c.geometry, c.entrance_flow, c.ramp_demands).state;
        dual = step(dual, d, c.entrance_flow, c.ramp_demands, nan).state;
        for (std::size_t i = 1; i < c.geometry.links.size(); ++i) {
          for (int grp = 0; grp < 2; ++grp) {
            CHECK(std::abs(dual.vehicles[grp][i] - single.vehicles[0][i] * d.share(grp)) <= 1e-9);
          }
          CHECK(std::abs(dual.ramp_queues[i] - single.ramp_queues[i]) <= 1e-9);
        }
        CHECK(std::abs(dual.entrance_queue - single.entrance_queue) <= 1e-9);
      }
    }
  }

  TEST_CASE("fixed split sends the requested share into the toll lane") {
    ModelLink a;
    a.capacity = 20.0;
    a.jam = 80.0;
    const auto g = corridor(20.0, 1.0, {a, a, a});
    const auto d = split_lanes(g, 1, 1);
    FixedSplit policy(0.25);
    const auto traj = run(d, constant_demand(8.0, {}), 20, empty_state(d), &policy);
    const auto& f = traj.flows.back();
    CHECK(f.ramp[kTollGroup][1] == Approx(2.0));
    CHECK(f.ramp[kGeneralGroup][1] == Approx(6.0));
    CHECK(traj.entrance_log.size() == 20);
    CHECK(traj.entrance_log.back().toll_share == Approx(0.25));
  }

  TEST_CASE("demand priority mode shares a full merge by demand") {
    ModelLink two;
    two.on_capacity = 3.0;
    const auto g = corridor(20.0, 1.0, {ModelLink{}, two, ModelLink{}}, PriorityMode::Demand);
    TrafficState s = empty_state(g);
    s.vehicles[0][1] = 9.0;
    s.vehicles[0][2] = 28.0;
    s.ramp_queues[2] = 3.0;
    const auto r = step(s, g, 0.0, {});
    CHECK(r.flows.mainline[0][1] == Approx(4.5));
    CHECK(r.flows.ramp[0][2] == Approx(1.5));
    const auto cap = corridor(20.0, 1.0, {ModelLink{}, two, ModelLink{}});
    const auto c = step(s, cap, 0.0, {});
    CHECK(c.flows.ramp[0][2] == Approx(6.0 * cap.link(2).ramp_priority));
  }

  TEST_CASE("incremental simulation matches run") {
    std::mt19937_64 rng(8);
    const auto c = random_corridor(rng);
    const auto d = constant_demand(c.entrance_flow, c.ramp_demands);
    const auto whole = run(c.geometry, d, 50, empty_state(c.geometry));
    Simulation sim(c.geometry, d, empty_state(c.geometry));
    sim.advance(20);
    sim.advance(30);
    CHECK(sim.state().vehicles == whole.states.back().vehicles);
    CHECK(sim.state().step == 50);
  }
}

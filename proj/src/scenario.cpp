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

#include "tollane/scenario.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "tollane/errors.hpp"

namespace tollane {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::size_t idx(int i) { return static_cast<std::size_t>(i); }

[[noreturn]] void parse_fail(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::Parse, where + ": " + what);
}

[[noreturn]] void invalid(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::Validation, where + ": " + what);
}

void allow_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) parse_fail(where, "expected an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) parse_fail(where, "unknown key \"" + it.key() + "\"");
  }
}

const json* find(const json& j, const char* key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) parse_fail(where, "expected a number");
  return j.get<double>();
}

double number_key(const json& j, const char* key, const std::string& where,
                  std::optional<double> fallback = std::nullopt) {
  const json* v = find(j, key);
  if (!v) {
    if (fallback) return *fallback;
    parse_fail(where, std::string("missing key \"") + key + "\"");
  }
  return number(*v, where + "." + key);
}

long integer_key(const json& j, const char* key, const std::string& where,
                 std::optional<long> fallback = std::nullopt) {
  const json* v = find(j, key);
  if (!v) {
    if (fallback) return *fallback;
    parse_fail(where, std::string("missing key \"") + key + "\"");
  }
  if (!v->is_number_integer()) parse_fail(where + "." + key, "expected an integer");
  return v->get<long>();
}

bool bool_key(const json& j, const char* key, const std::string& where, bool fallback) {
  const json* v = find(j, key);
  if (!v) return fallback;
  if (!v->is_boolean()) parse_fail(where + "." + key, "expected true or false");
  return v->get<bool>();
}

std::string string_key(const json& j, const char* key, const std::string& where,
                       const std::string& fallback) {
  const json* v = find(j, key);
  if (!v) return fallback;
  if (!v->is_string()) parse_fail(where + "." + key, "expected a string");
  return v->get<std::string>();
}

StepSeries parse_series(const json& j, const std::string& where) {
  StepSeries s;
  auto add = [&](long start, double value, const std::string& at) {
    if (start < 0) invalid(at, "from_step must be >= 0");
    if (!(value >= 0.0)) invalid(at, "demand must be >= 0, got " + std::to_string(value));
    s.add(start, value);
  };
  if (j.is_number()) {
    add(0, j.get<double>(), where);
    return s;
  }
  if (!j.is_array()) parse_fail(where, "expected a number or a list of {from_step, vph}");
  for (std::size_t k = 0; k < j.size(); ++k) {
    const std::string at = where + "[" + std::to_string(k) + "]";
    allow_keys(j[k], at, {"from_step", "vph"});
    add(integer_key(j[k], "from_step", at), number_key(j[k], "vph", at), at);
  }
  return s;
}

std::vector<std::pair<double, double>> parse_knots(const json& j, const std::string& where) {
  if (!j.is_array()) parse_fail(where, "expected a list of [price_per_hour, cdf] pairs");
  std::vector<std::pair<double, double>> out;
  for (std::size_t k = 0; k < j.size(); ++k) {
    const std::string at = where + "[" + std::to_string(k) + "]";
    if (!j[k].is_array() || j[k].size() != 2) parse_fail(at, "expected [price_per_hour, cdf]");
    out.emplace_back(number(j[k][0], at), number(j[k][1], at));
  }
  return out;
}

VotDistribution make_distribution(const std::vector<std::pair<double, double>>& knots,
                                  const std::string& where) {
  std::vector<double> prices;
  std::vector<double> cdf;
  for (const auto& [p, c] : knots) {
    prices.push_back(p);
    cdf.push_back(c);
  }
  try {
    return VotDistribution(prices, cdf);
  } catch (const Error& e) {
    invalid(where, e.what());
  }
}

RawLinkSpec parse_link(const json& j, const std::string& where) {
  RawLinkSpec l;
  l.length_miles = number_key(j, "length_miles", where);
  l.lanes = static_cast<int>(integer_key(j, "lanes", where));
  l.freeflow_mph = number_key(j, "freeflow_mph", where);
  l.congestion_mph = number_key(j, "congestion_mph", where);
  l.capacity_vphpl = number_key(j, "capacity_vphpl", where);
  l.jam_vpmpl = number_key(j, "jam_vpmpl", where);
  return l;
}

PricerConfig parse_pricer(const json& j, const std::string& where) {
  PricerConfig p;
  const std::string type = string_key(j, "type", where, "none");
  if (type == "none") {
    allow_keys(j, where, {"type"});
    return p;
  }
  if (type == "vot") {
    allow_keys(j, where,
               {"type", "vot_knots", "true_knots", "smoothing", "calibrate", "mode", "samples"});
    p.kind = PricerConfig::Kind::Vot;
    p.smoothing = number_key(j, "smoothing", where, kDefaultSmoothing);
    if (!(p.smoothing >= 0.0 && p.smoothing <= 1.0)) invalid(where, "smoothing must lie in [0, 1]");
    p.calibrate = bool_key(j, "calibrate", where, false);
    const std::string mode = string_key(j, "mode", where, "etl");
    if (mode == "etl") {
      p.mode = LaneMode::Etl;
    } else if (mode == "hot") {
      p.mode = LaneMode::Hot;
    } else {
      parse_fail(where + ".mode", "expected \"etl\" or \"hot\"");
    }
    const long samples = integer_key(j, "samples", where, 0);
    if (samples < 0) invalid(where, "samples must be >= 0");
    p.samples = static_cast<std::size_t>(samples);
  } else if (type == "auction") {
    allow_keys(j, where,
               {"type", "vot_knots", "true_knots", "variant", "first_rejected_price", "bidders"});
    p.kind = PricerConfig::Kind::Auction;
    const std::string variant = string_key(j, "variant", where, "standard");
    if (variant == "standard") {
      p.variant = AuctionVariant::Standard;
    } else if (variant == "revenue_max") {
      p.variant = AuctionVariant::RevenueMax;
    } else {
      parse_fail(where + ".variant", "expected \"standard\" or \"revenue_max\"");
    }
    p.first_rejected_price = bool_key(j, "first_rejected_price", where, false);
    const long bidders = integer_key(j, "bidders", where, 100);
    if (bidders < 1) invalid(where, "bidders must be >= 1");
    p.bidders = static_cast<std::size_t>(bidders);
  } else {
    parse_fail(where + ".type", "expected \"none\", \"vot\" or \"auction\"");
  }
  const json* knots = find(j, "vot_knots");
  if (!knots) parse_fail(where, "missing key \"vot_knots\"");
  p.belief = parse_knots(*knots, where + ".vot_knots");
  make_distribution(p.belief, where + ".vot_knots");
  if (const json* t = find(j, "true_knots")) {
    p.truth = parse_knots(*t, where + ".true_knots");
    make_distribution(p.truth, where + ".true_knots");
  } else {
    p.truth = p.belief;
  }
  return p;
}

InitialConfig parse_initial(const json& j, const std::string& where) {
  InitialConfig c;
  const std::string type = string_key(j, "type", where, "empty");
  if (type == "empty") {
    allow_keys(j, where, {"type"});
  } else if (type == "equilibrium") {
    allow_keys(j, where, {"type", "congested_from"});
    c.kind = InitialConfig::Kind::Equilibrium;
    c.congested_from = static_cast<int>(integer_key(j, "congested_from", where, 0));
  } else if (type == "explicit") {
    allow_keys(j, where, {"type", "vehicles", "ramp_queues", "entrance_queue"});
    c.kind = InitialConfig::Kind::Explicit;
    const json* v = find(j, "vehicles");
    if (!v || !v->is_array()) parse_fail(where, "explicit state needs \"vehicles\" per lane group");
    for (std::size_t g = 0; g < v->size(); ++g) {
      const std::string at = where + ".vehicles[" + std::to_string(g) + "]";
      if (!(*v)[g].is_array()) parse_fail(at, "expected a list of vehicle counts");
      std::vector<double> row;
      for (const auto& x : (*v)[g]) row.push_back(number(x, at));
      c.vehicles.push_back(std::move(row));
    }
    if (const json* q = find(j, "ramp_queues")) {
      if (!q->is_array()) parse_fail(where + ".ramp_queues", "expected a list");
      for (const auto& x : *q) c.ramp_queues.push_back(number(x, where + ".ramp_queues"));
    }
    c.entrance_queue = number_key(j, "entrance_queue", where, 0.0);
  } else {
    parse_fail(where + ".type", "expected \"empty\", \"equilibrium\" or \"explicit\"");
  }
  return c;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

const char* group_name(bool dual, int g) {
  if (!dual) return "all";
  return g == kTollGroup ? "toll" : "general";
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + p.string());
  return out;
}

ordered_json travel_json(const TravelMetrics& m) {
  ordered_json j;
  j["vmt"] = m.vmt;
  j["vht"] = m.vht;
  j["delay_vh"] = m.delay;
  return j;
}

}  // namespace

ScenarioConfig parse_config(const std::string& json_text, const std::string& origin) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    parse_fail(origin, e.what());
  }
  const std::string where = origin;
  allow_keys(root, where,
             {"name", "timestep_s", "horizon_steps", "priority_mode", "entrance", "links",
              "lane_split", "demand", "initial", "controller", "pricer", "compare", "seed",
              "output"});
  ScenarioConfig c;
  c.name = string_key(root, "name", where, "scenario");
  c.timestep_s = number_key(root, "timestep_s", where);
  if (!(c.timestep_s > 0.0)) invalid(where + ".timestep_s", "must be positive");
  c.horizon_steps = integer_key(root, "horizon_steps", where);
  if (c.horizon_steps < 1) invalid(where + ".horizon_steps", "must be at least 1");
  const std::string mode = string_key(root, "priority_mode", where, "capacity");
  if (mode == "capacity") {
    c.priority_mode = PriorityMode::Capacity;
  } else if (mode == "demand") {
    c.priority_mode = PriorityMode::Demand;
  } else {
    parse_fail(where + ".priority_mode", "expected \"capacity\" or \"demand\"");
  }

  const json* entrance = find(root, "entrance");
  if (!entrance) parse_fail(where, "missing key \"entrance\"");
  allow_keys(*entrance, where + ".entrance",
             {"length_miles", "lanes", "freeflow_mph", "capacity_vphpl"});
  c.entrance.length_miles = number_key(*entrance, "length_miles", where + ".entrance");
  c.entrance.lanes = static_cast<int>(integer_key(*entrance, "lanes", where + ".entrance"));
  c.entrance.freeflow_mph = number_key(*entrance, "freeflow_mph", where + ".entrance");
  c.entrance.capacity_vphpl = number_key(*entrance, "capacity_vphpl", where + ".entrance");
  c.entrance.congestion_mph = c.entrance.freeflow_mph;
  c.entrance.jam_vpmpl = 1.0;

  const json* links = find(root, "links");
  if (!links || !links->is_array() || links->empty()) {
    parse_fail(where, "\"links\" must be a nonempty list");
  }
  for (std::size_t k = 0; k < links->size(); ++k) {
    const json& j = (*links)[k];
    const std::string at = where + ".links[" + std::to_string(k) + "]";
    allow_keys(j, at,
               {"count", "length_miles", "lanes", "freeflow_mph", "congestion_mph",
                "capacity_vphpl", "jam_vpmpl", "on_ramp", "off_ramp"});
    const long count = integer_key(j, "count", at, 1);
    if (count < 1) invalid(at + ".count", "must be at least 1");
    const RawLinkSpec spec = parse_link(j, at);
    RawRampSpec ramp;
    const bool has_ramps = find(j, "on_ramp") || find(j, "off_ramp");
    if (has_ramps && count != 1) invalid(at, "ramps can only be attached to a single link");
    if (const json* on = find(j, "on_ramp")) {
      allow_keys(*on, at + ".on_ramp", {"capacity_vph", "freeflow_mph", "length_miles", "priority"});
      ramp.on_capacity_vph = number_key(*on, "capacity_vph", at + ".on_ramp");
      ramp.on_freeflow_mph = number_key(*on, "freeflow_mph", at + ".on_ramp");
      ramp.on_length_miles = number_key(*on, "length_miles", at + ".on_ramp");
      if (const json* p = find(*on, "priority")) ramp.priority = number(*p, at + ".on_ramp.priority");
    }
    if (const json* off = find(j, "off_ramp")) {
      allow_keys(*off, at + ".off_ramp", {"capacity_vph", "split"});
      ramp.off_capacity_vph = number_key(*off, "capacity_vph", at + ".off_ramp");
      ramp.split_off = number_key(*off, "split", at + ".off_ramp");
    }
    for (long n = 0; n < count; ++n) {
      c.links.push_back(spec);
      c.ramps.push_back(ramp);
    }
  }
  if (c.links.size() < 2) invalid(where + ".links", "need at least one mainline link and an exit");
  {
    const RawRampSpec& exit_ramp = c.ramps.back();
    if (exit_ramp.on_capacity_vph > 0.0 || exit_ramp.split_off > 0.0 ||
        exit_ramp.off_capacity_vph > 0.0) {
      invalid(where + ".links", "the exit link (last entry) cannot carry ramps");
    }
    c.ramps.pop_back();
  }

  if (const json* split = find(root, "lane_split")) {
    allow_keys(*split, where + ".lane_split", {"toll_lanes", "general_lanes"});
    const int l1 = static_cast<int>(integer_key(*split, "toll_lanes", where + ".lane_split"));
    const int l2 = static_cast<int>(integer_key(*split, "general_lanes", where + ".lane_split"));
    if (l1 < 1 || l2 < 1) invalid(where + ".lane_split", "both lane groups need at least one lane");
    c.lane_split = std::make_pair(l1, l2);
  }

  const json* demand = find(root, "demand");
  if (!demand) parse_fail(where, "missing key \"demand\"");
  allow_keys(*demand, where + ".demand", {"entrance_vph", "ramps_vph"});
  if (const json* e = find(*demand, "entrance_vph")) {
    c.entrance_demand_vph = parse_series(*e, where + ".demand.entrance_vph");
  }
  if (const json* r = find(*demand, "ramps_vph")) {
    if (!r->is_object()) parse_fail(where + ".demand.ramps_vph", "expected an object keyed by link");
    for (auto it = r->begin(); it != r->end(); ++it) {
      const std::string at = where + ".demand.ramps_vph." + it.key();
      int link = 0;
      try {
        std::size_t used = 0;
        link = std::stoi(it.key(), &used);
        if (used != it.key().size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        parse_fail(at, "ramp demand keys must be link numbers");
      }
      c.ramp_demand_vph.emplace_back(link, parse_series(it.value(), at));
    }
  }

  if (const json* init = find(root, "initial")) c.initial = parse_initial(*init, where + ".initial");
  c.controller = bool_key(root, "controller", where, false);
  if (const json* p = find(root, "pricer")) c.pricer = parse_pricer(*p, where + ".pricer");
  if (const json* cmp = find(root, "compare")) {
    allow_keys(*cmp, where + ".compare", {"base_toll_share"});
    c.base_toll_share = number_key(*cmp, "base_toll_share", where + ".compare", 0.0);
    if (!(c.base_toll_share >= 0.0 && c.base_toll_share <= 1.0)) {
      invalid(where + ".compare.base_toll_share", "must lie in [0, 1]");
    }
  }
  if (const json* seed = find(root, "seed")) {
    if (!seed->is_number_unsigned() && !(seed->is_number_integer() && seed->get<long>() >= 0)) {
      parse_fail(where + ".seed", "expected a nonnegative integer");
    }
    c.seed = seed->get<std::uint64_t>();
  }
  c.output = string_key(root, "output", where, "");
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(os.str(), path.string());
}

Scenario prepare(const ScenarioConfig& config) {
  Scenario s;
  s.config = config;
  const double tau = config.timestep_s / 3600.0;
  try {
    s.geometry = build_geometry(config.entrance, config.links, config.ramps, tau,
                                config.priority_mode);
  } catch (const CflViolation& e) {
    std::vector<RawLinkSpec> all(config.links.begin(), config.links.end());
    all.push_back(config.entrance);
    const double limit_s = max_timestep(all) * 3600.0;
    throw Error(ErrorCode::Validation, std::string(e.what()) + "; the largest time step admissible "
                                       "on every link is " + fmt(limit_s) + " s");
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidArgument) throw Error(ErrorCode::Validation, e.what());
    throw;
  }
  const ValidationReport report = validate_geometry(s.geometry);
  if (!report.ok()) throw Error(ErrorCode::Validation, "invalid geometry:\n" + report.to_string());

  const int k = s.geometry.mainline_count();
  s.demand.entrance = StepSeries();
  for (const auto& [start, vph] : config.entrance_demand_vph.points()) {
    s.demand.entrance.add(start, vph * tau);
  }
  s.demand.ramps.assign(s.geometry.links.size(), StepSeries());
  for (const auto& [link, series] : config.ramp_demand_vph) {
    if (link < 1 || link > k) {
      throw Error(ErrorCode::Validation,
                  "ramp demand given for link " + std::to_string(link) + " outside 1.." +
                      std::to_string(k));
    }
    if (!s.geometry.link(link).ramp.has_on_ramp()) {
      throw Error(ErrorCode::Validation,
                  "ramp demand given for link " + std::to_string(link) + " which has no on-ramp");
    }
    StepSeries scaled;
    for (const auto& [start, vph] : series.points()) scaled.add(start, vph * tau);
    s.demand.ramps[idx(link)] = scaled;
  }
  if (config.lane_split) {
    try {
      s.dual = split_lanes(s.geometry, config.lane_split->first, config.lane_split->second);
    } catch (const Error& e) {
      throw Error(ErrorCode::Validation, e.what());
    }
  } else if (config.controller || config.pricer.kind != PricerConfig::Kind::None) {
    throw Error(ErrorCode::Validation, "controller and pricer need a lane_split");
  }
  if (config.initial.kind == InitialConfig::Kind::Explicit) {
    const std::size_t groups = s.dual ? 2 : 1;
    if (config.initial.vehicles.size() != groups) {
      throw Error(ErrorCode::Validation,
                  "explicit initial state needs " + std::to_string(groups) + " vehicle lists");
    }
  }
  initial_state(s);
  return s;
}

namespace {

std::vector<double> equilibrium_densities(const Scenario& s) {
  const auto& g = s.geometry;
  const int links = static_cast<int>(g.links.size());
  const EquilibriumReport rep =
      analyze_equilibrium(g, s.demand.entrance_at(0), s.demand.ramps_at(links, 0));
  const auto& e = rep.densities;
  std::vector<int> free_link;
  std::vector<double> position;
  const int c = s.config.initial.congested_from;
  for (const auto& seg : e.segments) {
    if (seg.single()) {
      free_link.push_back(0);
      position.push_back(0.0);
      continue;
    }
    const int h = std::clamp(c, seg.family_begin(), seg.family_end());
    free_link.push_back(h);
    position.push_back(c <= h ? 1.0 : 0.0);
  }
  return density_member(e, free_link, position);
}

TrafficState single_initial(const Scenario& s) {
  const auto& g = s.geometry;
  TrafficState st = empty_state(g);
  const auto& ic = s.config.initial;
  if (ic.kind == InitialConfig::Kind::Equilibrium) {
    const int links = static_cast<int>(g.links.size());
    const MaxFlows mf = max_flows(g, s.demand.entrance_at(0), s.demand.ramps_at(links, 0));
    st = equilibrium_state(g, mf, equilibrium_densities(s));
  } else if (ic.kind == InitialConfig::Kind::Explicit) {
    const std::size_t n = g.links.size();
    for (const auto& row : ic.vehicles) {
      if (row.size() != n - 1) {
        throw Error(ErrorCode::Validation,
                    "explicit vehicles need one entry per link 1.." + std::to_string(n - 1));
      }
      for (std::size_t i = 1; i < n; ++i) st.vehicles[0][i] += row[i - 1];
    }
    if (!ic.ramp_queues.empty()) {
      if (ic.ramp_queues.size() != n - 2) {
        throw Error(ErrorCode::Validation, "ramp_queues need one entry per mainline link");
      }
      for (std::size_t i = 1; i + 1 < n; ++i) st.ramp_queues[i] = ic.ramp_queues[i - 1];
    }
    st.entrance_queue = ic.entrance_queue;
  }
  return st;
}

void check_initial(const TrafficState& st, const std::vector<std::vector<double>>& jam) {
  for (std::size_t g = 0; g < st.vehicles.size(); ++g) {
    for (std::size_t i = 1; i < st.vehicles[g].size(); ++i) {
      const double v = st.vehicles[g][i];
      if (!(v >= 0.0) || v > jam[g][i] * (1.0 + 1e-12)) {
        throw Error(ErrorCode::Validation,
                    "initial vehicles on link " + std::to_string(i) + " outside [0, N]");
      }
    }
  }
  for (double q : st.ramp_queues) {
    if (!(q >= 0.0)) throw Error(ErrorCode::Validation, "initial ramp queues must be >= 0");
  }
  if (!(st.entrance_queue >= 0.0)) {
    throw Error(ErrorCode::Validation, "initial entrance queue must be >= 0");
  }
}

}  // namespace

TrafficState initial_state(const Scenario& s) {
  const auto& ic = s.config.initial;
  const std::size_t n = s.geometry.links.size();
  if (!s.dual) {
    TrafficState st = single_initial(s);
    std::vector<std::vector<double>> jam(1, std::vector<double>(n, 0.0));
    for (std::size_t i = 1; i < n; ++i) jam[0][i] = s.geometry.links[i].fd.jam;
    check_initial(st, jam);
    return st;
  }
  const DualGeometry& d = *s.dual;
  TrafficState st = empty_state(d);
  if (ic.kind == InitialConfig::Kind::Explicit) {
    for (std::size_t g = 0; g < 2; ++g) {
      if (ic.vehicles[g].size() != n - 1) {
        throw Error(ErrorCode::Validation,
                    "explicit vehicles need one entry per link 1.." + std::to_string(n - 1));
      }
      for (std::size_t i = 1; i < n; ++i) st.vehicles[g][i] = ic.vehicles[g][i - 1];
    }
    if (!ic.ramp_queues.empty()) {
      if (ic.ramp_queues.size() != n - 2) {
        throw Error(ErrorCode::Validation, "ramp_queues need one entry per mainline link");
      }
      for (std::size_t i = 2; i + 1 < n; ++i) st.ramp_queues[i] = ic.ramp_queues[i - 1];
    }
    st.entrance_queue = ic.entrance_queue;
  } else if (ic.kind == InitialConfig::Kind::Equilibrium) {
    const TrafficState base = single_initial(s);
    for (int g = 0; g < 2; ++g) {
      for (std::size_t i = 1; i < n; ++i) st.vehicles[idx(g)][i] = base.vehicles[0][i] * d.share(g);
    }
    st.ramp_queues = base.ramp_queues;
    st.ramp_queues[1] = 0.0;
    st.entrance_queue = base.entrance_queue;
  }
  std::vector<std::vector<double>> jam(2, std::vector<double>(n, 0.0));
  for (int g = 0; g < 2; ++g) {
    for (std::size_t i = 1; i < n; ++i) jam[idx(g)][i] = d.groups[idx(g)][i].jam;
  }
  check_initial(st, jam);
  return st;
}

ScenarioRun::ScenarioRun(const Scenario& s, const RunOptions& options) : scenario_(&s) {
  dual_ = s.dual.has_value() && !options.merge_lanes;
  if (!dual_) {
    label_ = "all-gp";
    TrafficState init;
    if (s.dual) {
      const TrafficState split = initial_state(s);
      init = empty_state(s.geometry);
      for (std::size_t i = 1; i < s.geometry.links.size(); ++i) {
        init.vehicles[0][i] = split.vehicles[0][i] + split.vehicles[1][i];
      }
      init.ramp_queues = split.ramp_queues;
      init.entrance_queue = split.entrance_queue;
    } else {
      init = initial_state(s);
    }
    sim_ = std::make_unique<Simulation>(s.geometry, s.demand, init);
    return;
  }

  const DualGeometry& d = *s.dual;
  const std::uint64_t seed = options.seed.value_or(s.config.seed);
  if (options.fixed_toll_share) {
    label_ = "fixed-share";
    policy_ = std::make_unique<FixedSplit>(*options.fixed_toll_share);
  } else if (options.controller.value_or(s.config.controller)) {
    label_ = "controlled";
    auto c = std::make_unique<TollLaneController>(d);
    targets_ = c->targets();
    policy_ = std::move(c);
  } else {
    label_ = "uncontrolled";
  }

  const auto& pc = s.config.pricer;
  if (options.use_pricer && pc.kind != PricerConfig::Kind::None) {
    const VotDistribution belief = make_distribution(pc.belief, "pricer.vot_knots");
    const VotDistribution truth = make_distribution(pc.truth, "pricer.true_knots");
    if (pc.kind == PricerConfig::Kind::Vot) {
      VotPricerOptions o;
      o.calibrate = pc.calibrate;
      o.smoothing = pc.smoothing;
      o.mode = pc.mode;
      o.samples = pc.samples;
      o.seed = seed;
      auto p = std::make_unique<VotPricer>(belief, truth, o);
      vot_ = p.get();
      pricer_ = std::move(p);
    } else {
      AuctionPricerOptions o;
      o.variant = pc.variant;
      o.first_rejected_price = pc.first_rejected_price;
      o.bidders = pc.bidders;
      o.seed = seed;
      pricer_ = std::make_unique<AuctionPricer>(truth, o);
    }
  }
  sim_ = std::make_unique<Simulation>(d, s.demand, initial_state(s), policy_.get(), pricer_.get());
}

void ScenarioRun::advance(long steps) { sim_->advance(steps); }

long ScenarioRun::steps_done() const {
  return static_cast<long>(sim_->trajectory().flows.size());
}

MetricsReport ScenarioRun::current_metrics() const {
  return metrics(sim_->trajectory(), scenario_->geometry);
}

RunResult ScenarioRun::finish() {
  RunResult out;
  out.label = label_;
  out.dual = dual_;
  out.trajectory = sim_->release();
  out.metrics = metrics(out.trajectory, scenario_->geometry);
  out.targets = targets_;
  if (vot_ && scenario_->config.pricer.calibrate) out.calibrated = vot_->belief();
  return out;
}

RunResult run_scenario(const Scenario& s, const RunOptions& options) {
  ScenarioRun r(s, options);
  r.advance(s.config.horizon_steps);
  return r.finish();
}

std::string metrics_json(const Scenario& s, const RunResult& r) {
  ordered_json j;
  j["scenario"] = s.config.name;
  j["run"] = r.label;
  j["timestep_s"] = s.config.timestep_s;
  j["horizon_steps"] = s.config.horizon_steps;
  j["total"] = travel_json(r.metrics.total);
  ordered_json groups = ordered_json::object();
  for (std::size_t g = 0; g < r.metrics.groups.size(); ++g) {
    groups[group_name(r.dual, static_cast<int>(g))] = travel_json(r.metrics.groups[g]);
  }
  j["lane_groups"] = groups;
  j["queues"] = travel_json(r.metrics.queues);
  const TrafficState& last = r.trajectory.states.back();
  j["final_vehicles"] = last.total();
  if (!r.trajectory.entrance_log.empty()) {
    double revenue = 0.0;
    for (const auto& e : r.trajectory.entrance_log) revenue += e.revenue;
    j["revenue"] = revenue;
  }
  return j.dump(2) + "\n";
}

void write_outputs(const Scenario& s, const RunResult& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
  const auto& g = s.geometry;
  const auto& traj = r.trajectory;
  const int exit = g.exit_index();
  const int groups = static_cast<int>(traj.group_shares.size());
  const std::size_t horizon = traj.flows.size();

  {
    auto out = open_out(dir / "contours.csv");
    out << "t,link,lane_group,vehicles,density_vpm,speed_mph\n";
    for (std::size_t t = 0; t < horizon; ++t) {
      for (int grp = 0; grp < groups; ++grp) {
        for (int i = 1; i < exit; ++i) {
          out << t << ',' << i << ',' << group_name(r.dual, grp) << ','
              << fmt(traj.states[t].vehicles[idx(grp)][idx(i)]) << ','
              << fmt(r.metrics.density_vpmpl[idx(grp)][t][idx(i - 1)]) << ','
              << fmt(r.metrics.speed_mph[idx(grp)][t][idx(i - 1)]) << '\n';
        }
      }
    }
  }
  {
    auto out = open_out(dir / "flows.csv");
    out << "t,link,lane_group,f,r,s,queue\n";
    for (std::size_t t = 0; t < horizon; ++t) {
      const TrafficState& st = traj.states[t];
      const StepFlows& fl = traj.flows[t];
      if (!r.dual) {
        out << t << ",0,all," << fmt(fl.mainline[0][0]) << ",0,0," << fmt(st.entrance_queue)
            << '\n';
      }
      for (int grp = 0; grp < groups; ++grp) {
        for (int i = 1; i <= exit; ++i) {
          const double queue =
              (r.dual && i == 1) ? st.entrance_queue : st.ramp_queues[idx(i)];
          out << t << ',' << i << ',' << group_name(r.dual, grp) << ','
              << fmt(fl.mainline[idx(grp)][idx(i)]) << ',' << fmt(fl.ramp[idx(grp)][idx(i)])
              << ',' << fmt(fl.offramp[idx(grp)][idx(i)]) << ',' << fmt(queue) << '\n';
        }
      }
    }
  }
  {
    auto out = open_out(dir / "directives.csv");
    out << "t,entrance,alpha1,toll,revenue\n";
    for (const auto& e : traj.entrance_log) {
      out << e.step << ',' << e.link << ',' << fmt(e.toll_share) << ',' << fmt(e.toll) << ','
          << fmt(e.revenue) << '\n';
    }
  }
  {
    auto out = open_out(dir / "metrics.json");
    out << metrics_json(s, r);
  }
  if (r.calibrated) {
    auto out = open_out(dir / "calibration.csv");
    out << "price_per_hour,cdf\n";
    const auto& p = r.calibrated->prices();
    const auto& c = r.calibrated->cdf_values();
    for (std::size_t k = 0; k < p.size(); ++k) out << fmt(p[k]) << ',' << fmt(c[k]) << '\n';
  }
}

EquilibriumReport analyze(const Scenario& s) {
  if (!s.demand.is_constant()) {
    throw Error(ErrorCode::Validation, "equilibrium analysis needs constant demand");
  }
  const int links = static_cast<int>(s.geometry.links.size());
  return analyze_equilibrium(s.geometry, s.demand.entrance_at(0), s.demand.ramps_at(links, 0));
}

std::string analysis_text(const Scenario& s, const EquilibriumReport& r) {
  std::ostringstream os;
  os << "scenario: " << s.config.name << '\n';
  os << render(r);
  if (r.densities.single_vector()) {
    os << "unique equilibrium: n =";
    const auto n = density_member(r.densities, {}, {});
    for (std::size_t i = 1; i < n.size(); ++i) os << ' ' << fmt(n[i]);
    os << '\n';
  }
  const int links = static_cast<int>(s.geometry.links.size());
  const double entrance = s.demand.entrance_at(0);
  const auto d = s.demand.ramps_at(links, 0);
  os << "queue growth (vehicles/step):\n";
  os << "  entrance: " << fmt(entrance - r.flows.mainline[0]) << '\n';
  for (int i = 1; i <= s.geometry.mainline_count(); ++i) {
    if (!s.geometry.link(i).ramp.has_on_ramp()) continue;
    os << "  ramp " << i << ": " << fmt(d[idx(i)] - r.flows.ramp[idx(i)]) << '\n';
  }
  return os.str();
}

std::string analysis_json(const Scenario& s, const EquilibriumReport& r) {
  ordered_json j;
  j["scenario"] = s.config.name;
  j["feasibility"] = to_string(r.feasibility);
  j["max_flow"] = r.max.mainline;
  j["max_ramp_flow"] = r.max.ramp;
  j["flow"] = r.flows.mainline;
  j["ramp_flow"] = r.flows.ramp;
  const auto& e = r.densities;
  j["bottlenecks"] = e.bottlenecks;
  j["forced_uncongested"] = e.forced_uncongested;
  j["forced_congested"] = e.forced_congested;
  j["n_uncongested"] = e.uncongested;
  j["n_congested"] = e.congested;
  ordered_json segs = ordered_json::array();
  for (const auto& seg : e.segments) {
    ordered_json x;
    x["first"] = seg.first;
    x["last"] = seg.last;
    x["uncongested_end"] = seg.uncongested_end;
    x["congested_start"] = seg.congested_start;
    x["single"] = seg.single();
    segs.push_back(x);
  }
  j["segments"] = segs;
  j["near_degenerate"] = e.near_degenerate;
  const int links = static_cast<int>(s.geometry.links.size());
  const auto d = s.demand.ramps_at(links, 0);
  ordered_json growth;
  growth["entrance"] = s.demand.entrance_at(0) - r.flows.mainline[0];
  ordered_json ramps = ordered_json::object();
  for (int i = 1; i <= s.geometry.mainline_count(); ++i) {
    if (s.geometry.link(i).ramp.has_on_ramp()) {
      ramps[std::to_string(i)] = d[idx(i)] - r.flows.ramp[idx(i)];
    }
  }
  growth["ramps"] = ramps;
  j["queue_growth"] = growth;
  return j.dump(2) + "\n";
}

CompareResult compare(const Scenario& s, std::optional<std::uint64_t> seed) {
  if (!s.dual) throw Error(ErrorCode::Validation, "compare needs a lane_split");
  CompareResult c;
  RunOptions base;
  base.fixed_toll_share = s.config.base_toll_share;
  base.use_pricer = false;
  base.seed = seed;
  c.base = run_scenario(s, base);
  c.base.label = "base";

  RunOptions merged;
  merged.merge_lanes = true;
  c.all_gp = run_scenario(s, merged);
  c.all_gp.label = "all-gp";

  RunOptions hot;
  hot.controller = true;
  hot.seed = seed;
  c.hot = run_scenario(s, hot);
  c.hot.label = "hot";
  return c;
}

std::string compare_table(const CompareResult& c) {
  std::ostringstream os;
  auto row = [&](const char* label, const RunResult& r, double TravelMetrics::*field) {
    char buf[160];
    const double toll = r.dual ? r.metrics.groups[kTollGroup].*field : 0.0;
    const double general =
        r.dual ? r.metrics.groups[kGeneralGroup].*field : r.metrics.groups[0].*field;
    std::snprintf(buf, sizeof buf, "%-8s %14.3f %14.3f %14.3f %14.3f\n", label, toll, general,
                  r.metrics.queues.*field, r.metrics.total.*field);
    os << buf;
  };
  os << "Vehicle-miles traveled\n";
  os << "run                toll        general         queues          total\n";
  row("base", c.base, &TravelMetrics::vmt);
  row("all-gp", c.all_gp, &TravelMetrics::vmt);
  row("hot", c.hot, &TravelMetrics::vmt);
  os << "\nVehicle-hours of delay\n";
  os << "run                toll        general         queues          total\n";
  row("base", c.base, &TravelMetrics::delay);
  row("all-gp", c.all_gp, &TravelMetrics::delay);
  row("hot", c.hot, &TravelMetrics::delay);
  return os.str();
}

void write_compare(const Scenario& s, const CompareResult& c, const std::filesystem::path& dir) {
  write_outputs(s, c.base, dir / "base");
  write_outputs(s, c.all_gp, dir / "all_gp");
  write_outputs(s, c.hot, dir / "hot");
  {
    auto out = open_out(dir / "compare.txt");
    out << compare_table(c);
  }
  ordered_json j;
  j["scenario"] = s.config.name;
  for (const RunResult* r : {&c.base, &c.all_gp, &c.hot}) {
    ordered_json x;
    x["total"] = travel_json(r->metrics.total);
    x["queues"] = travel_json(r->metrics.queues);
    ordered_json groups = ordered_json::object();
    for (std::size_t g = 0; g < r->metrics.groups.size(); ++g) {
      groups[group_name(r->dual, static_cast<int>(g))] = travel_json(r->metrics.groups[g]);
    }
    x["lane_groups"] = groups;
    j[r->label] = x;
  }
  auto out = open_out(dir / "compare.json");
  out << j.dump(2) << '\n';
}

}  // namespace tollane

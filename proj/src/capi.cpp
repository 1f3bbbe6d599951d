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

#include "tollane/tollane.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <new>
#include <string>

#include "tollane/errors.hpp"
#include "tollane/scenario.hpp"

struct tollane_scenario {
  tollane::Scenario scenario;
};

struct tollane_sim {
  std::unique_ptr<tollane::Scenario> scenario;
  std::unique_ptr<tollane::ScenarioRun> run;
};

namespace {

thread_local std::string g_last_error;

int fail(int code, const std::string& message) {
  g_last_error = message;
  return code;
}

int map_code(tollane::ErrorCode c) {
  using tollane::ErrorCode;
  switch (c) {
    case ErrorCode::Parse:
      return TOLLANE_E_PARSE;
    case ErrorCode::Validation:
    case ErrorCode::CflViolation:
      return TOLLANE_E_VALIDATION;
    case ErrorCode::InvalidArgument:
      return TOLLANE_E_ARGUMENT;
    case ErrorCode::Io:
      return TOLLANE_E_IO;
    default:
      return TOLLANE_E_RUNTIME;
  }
}

template <class F>
int guarded(F&& f) {
  g_last_error.clear();
  try {
    f();
    return TOLLANE_OK;
  } catch (const tollane::Error& e) {
    return fail(map_code(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(TOLLANE_E_RUNTIME, "out of memory");
  } catch (const std::exception& e) {
    return fail(TOLLANE_E_RUNTIME, e.what());
  }
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

std::optional<std::uint64_t> seed_of(uint64_t seed, int has_seed) {
  if (!has_seed) return std::nullopt;
  return seed;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::error_code ec;
  std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream out(p, std::ios::binary);
  if (!out) throw tollane::Error(tollane::ErrorCode::Io, "cannot write " + p.string());
  out << text;
}

}  // namespace

extern "C" {

const char* tollane_version(void) { return "0.1.0"; }

const char* tollane_last_error(void) { return g_last_error.c_str(); }

void tollane_string_free(char* s) { std::free(s); }

int tollane_scenario_load(const char* path, tollane_scenario** out) {
  if (!path || !out) return fail(TOLLANE_E_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    auto sc = std::make_unique<tollane_scenario>();
    sc->scenario = tollane::prepare(tollane::load_config(path));
    *out = sc.release();
  });
}

int tollane_scenario_load_string(const char* json, tollane_scenario** out) {
  if (!json || !out) return fail(TOLLANE_E_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    auto sc = std::make_unique<tollane_scenario>();
    sc->scenario = tollane::prepare(tollane::parse_config(json));
    *out = sc.release();
  });
}

void tollane_scenario_free(tollane_scenario* sc) { delete sc; }

int tollane_scenario_links(const tollane_scenario* sc, int* out) {
  if (!sc || !out) return fail(TOLLANE_E_ARGUMENT, "null argument");
  *out = sc->scenario.geometry.mainline_count();
  return TOLLANE_OK;
}

int tollane_scenario_horizon(const tollane_scenario* sc, long* out) {
  if (!sc || !out) return fail(TOLLANE_E_ARGUMENT, "null argument");
  *out = sc->scenario.config.horizon_steps;
  return TOLLANE_OK;
}

int tollane_scenario_output(const tollane_scenario* sc, char** out) {
  if (!sc || !out) return fail(TOLLANE_E_ARGUMENT, "null argument");
  return guarded([&] { *out = dup(sc->scenario.config.output); });
}

int tollane_run(const tollane_scenario* sc, const char* out_dir, uint64_t seed, int has_seed) {
  if (!sc || !out_dir) return fail(TOLLANE_E_ARGUMENT, "null argument");
  return guarded([&] {
    tollane::RunOptions o;
    o.seed = seed_of(seed, has_seed);
    const auto r = tollane::run_scenario(sc->scenario, o);
    tollane::write_outputs(sc->scenario, r, out_dir);
  });
}

int tollane_analyze(const tollane_scenario* sc, const char* out_dir, char** report) {
  if (!sc || !report) return fail(TOLLANE_E_ARGUMENT, "null argument");
  *report = nullptr;
  return guarded([&] {
    const auto r = tollane::analyze(sc->scenario);
    if (out_dir) {
      write_text(std::filesystem::path(out_dir) / "analysis.json",
                 tollane::analysis_json(sc->scenario, r));
    }
    *report = dup(tollane::analysis_text(sc->scenario, r));
  });
}

int tollane_compare(const tollane_scenario* sc, const char* out_dir, uint64_t seed, int has_seed,
                    char** report) {
  if (!sc || !report) return fail(TOLLANE_E_ARGUMENT, "null argument");
  *report = nullptr;
  return guarded([&] {
    const auto c = tollane::compare(sc->scenario, seed_of(seed, has_seed));
    if (out_dir) tollane::write_compare(sc->scenario, c, out_dir);
    *report = dup(tollane::compare_table(c));
  });
}

int tollane_sim_create(const tollane_scenario* sc, uint64_t seed, int has_seed,
                       tollane_sim** out) {
  if (!sc || !out) return fail(TOLLANE_E_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    auto sim = std::make_unique<tollane_sim>();
    sim->scenario = std::make_unique<tollane::Scenario>(sc->scenario);
    tollane::RunOptions o;
    o.seed = seed_of(seed, has_seed);
    sim->run = std::make_unique<tollane::ScenarioRun>(*sim->scenario, o);
    *out = sim.release();
  });
}

int tollane_sim_step(tollane_sim* sim, long steps) {
  if (!sim) return fail(TOLLANE_E_ARGUMENT, "null argument");
  if (steps < 0) return fail(TOLLANE_E_ARGUMENT, "steps must be >= 0");
  return guarded([&] { sim->run->advance(steps); });
}

int tollane_sim_shape(const tollane_sim* sim, int* groups, int* links) {
  if (!sim || !groups || !links) return fail(TOLLANE_E_ARGUMENT, "null argument");
  *groups = sim->run->dual() ? 2 : 1;
  *links = static_cast<int>(sim->scenario->geometry.links.size());
  return TOLLANE_OK;
}

int tollane_sim_vehicles(const tollane_sim* sim, int group, double* out, size_t len) {
  if (!sim || !out) return fail(TOLLANE_E_ARGUMENT, "null argument");
  const auto& st = sim->run->simulation().state();
  if (group < 0 || group >= st.groups()) return fail(TOLLANE_E_ARGUMENT, "no such lane group");
  const auto& v = st.vehicles[static_cast<std::size_t>(group)];
  if (len < v.size()) return fail(TOLLANE_E_ARGUMENT, "output buffer too small");
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i];
  return TOLLANE_OK;
}

int tollane_sim_metrics(const tollane_sim* sim, tollane_metrics* out) {
  if (!sim || !out) return fail(TOLLANE_E_ARGUMENT, "null argument");
  return guarded([&] {
    const auto m = sim->run->current_metrics();
    out->vmt = m.total.vmt;
    out->vht = m.total.vht;
    out->delay = m.total.delay;
    out->queue_vht = m.queues.vht;
    out->queue_delay = m.queues.delay;
  });
}

void tollane_sim_free(tollane_sim* sim) { delete sim; }

}  // extern "C"

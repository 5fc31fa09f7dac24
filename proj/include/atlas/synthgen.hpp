#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "atlas/cdr.hpp"
#include "atlas/core.hpp"
#include "atlas/csv.hpp"
#include "atlas/rng.hpp"
#include "atlas/spatial.hpp"
#include "atlas/temporal.hpp"

namespace atlas {

// Local-hour window [start_hour, end_hour) active on the days set in
// day_mask (bit 0 = Monday .. bit 6 = Sunday).
struct ScheduleWindow {
  std::uint8_t day_mask = 0;
  int start_hour = 0;
  int end_hour = 0;
  std::string tower_id;

  friend bool operator==(const ScheduleWindow&, const ScheduleWindow&) = default;
};

constexpr std::uint8_t kAllDays = 0x7f;
constexpr std::uint8_t kWeekdays = 0x1f;
constexpr std::uint8_t kWeekendDays = 0x60;

inline std::uint8_t day_bit(int day_of_week) {
  return static_cast<std::uint8_t>(1u << day_of_week);
}

struct AgentSpec {
  std::string agent_id;
  std::string home_tower;
  std::string work_tower;
  std::vector<ScheduleWindow> schedule;
  double call_rate = 1.0;  // expected calls per active hour
  std::vector<std::string> contact_set;
  std::int64_t jitter_seconds = 0;

  friend bool operator==(const AgentSpec&, const AgentSpec&) = default;
};

struct GravityParams {
  double c = 1.0;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;

  friend bool operator==(const GravityParams&, const GravityParams&) = default;
};

// Direct flow-realization mode: synthesize call records whose
// consecutive-encounter flows follow the gravity law over the planted
// per-tower weights, with realized tower popularity exactly proportional to
// those weights.
struct GravityPlan {
  GravityParams params;
  std::map<std::string, double> popularity;  // planted weight per tower

  friend bool operator==(const GravityPlan&, const GravityPlan&) = default;
};

// Epoch of 2016-07-04 00:00 at the given fixed offset (a Monday).
inline std::int64_t default_base_epoch(int tz_offset_hours) {
  return 1467590400 - std::int64_t(tz_offset_hours) * 3600;
}

struct ScenarioConfig {
  TowerTable towers;
  std::vector<AgentSpec> agents;
  int days = 7;
  int tz_offset_hours = 2;
  std::uint64_t seed = 1;
  std::int64_t base_epoch = default_base_epoch(2);  // start of day 0, local midnight
  std::int64_t time_grid_seconds = 1;   // call times snap to this grid
  std::int64_t call_duration_seconds = 60;
  bool ensure_contact_coverage = true;  // guarantee >= 1 call per planted edge
  std::optional<GravityPlan> gravity;

  void validate() const {
    if (days < 1) fail("scenario: days must be >= 1");
    if (towers.empty()) fail("scenario: no towers");
    if (time_grid_seconds < 1) fail("scenario: time_grid must be >= 1");
    if (call_duration_seconds < 0) fail("scenario: call_duration must be >= 0");
    std::unordered_set<std::string_view> agent_ids;
    for (const AgentSpec& a : agents) {
      if (a.agent_id.empty()) fail("scenario: empty agent id");
      if (!agent_ids.insert(a.agent_id).second)
        fail("scenario: duplicate agent " + a.agent_id);
      if (!a.home_tower.empty() && !towers.contains(a.home_tower))
        fail("scenario: agent " + a.agent_id + ": unknown home tower " + a.home_tower);
      if (!a.work_tower.empty() && !towers.contains(a.work_tower))
        fail("scenario: agent " + a.agent_id + ": unknown work tower " + a.work_tower);
      if (a.call_rate < 0) fail("scenario: agent " + a.agent_id + ": negative call_rate");
      if (a.jitter_seconds < 0) fail("scenario: agent " + a.agent_id + ": negative jitter");
      for (const ScheduleWindow& w : a.schedule) {
        if (w.day_mask == 0 || (w.day_mask & ~kAllDays))
          fail("scenario: agent " + a.agent_id + ": bad day set");
        if (w.start_hour < 0 || w.end_hour > 24 || w.start_hour >= w.end_hour)
          fail("scenario: agent " + a.agent_id + ": bad hour window");
        if (!towers.contains(w.tower_id))
          fail("scenario: agent " + a.agent_id + ": unknown tower " + w.tower_id);
      }
      for (const std::string& c : a.contact_set)
        if (c == a.agent_id)
          fail("scenario: agent " + a.agent_id + ": contact set includes self");
    }
    if (gravity) {
      std::size_t usable = 0;
      for (const auto& [tower_id, weight] : gravity->popularity) {
        if (!towers.contains(tower_id))
          fail("scenario: gravity popularity references unknown tower " + tower_id);
        if (weight < 1.0)
          fail("scenario: gravity popularity for " + tower_id + " must be >= 1");
        // realized episode counts are integers; integral weights keep the
        // realized popularity exactly proportional to the planted weights
        if (weight != std::floor(weight))
          fail("scenario: gravity popularity for " + tower_id + " must be integral");
        ++usable;
      }
      if (usable < 2) fail("scenario: gravity mode needs >= 2 weighted towers");
    }
  }
};

// Ground truth captured while generating; drives planted-truth assertions and
// the scenario manifest.
struct GeneratedTruth {
  std::int64_t record_count = 0;
  std::int64_t agent_count = 0;
  std::vector<PairKey> planted_edges;  // realized contact pairs, sorted
  std::optional<GravityParams> gravity_params;
  std::int64_t gravity_transitions = 0;
  std::int64_t gravity_popularity_scale = 0;  // realized N_i = scale * weight_i
};

namespace detail {

struct CompactCall {
  std::uint32_t caller = 0;
  std::uint32_t callee = 0;
  std::uint32_t tower = 0;
  std::int64_t start = 0;

  friend bool operator<(const CompactCall& a, const CompactCall& b) {
    return std::tie(a.start, a.caller, a.callee, a.tower) <
           std::tie(b.start, b.caller, b.callee, b.tower);
  }
};

struct GeneratedBatch {
  std::vector<std::string> users;   // by intern index
  std::vector<std::string> towers;  // by intern index
  std::vector<CompactCall> calls;   // sorted by (start, caller, callee, tower)
  GeneratedTruth truth;
};

class NameInterner {
 public:
  std::uint32_t intern(std::string_view s) {
    auto it = index_.find(s);
    if (it != index_.end()) return it->second;
    std::uint32_t idx = static_cast<std::uint32_t>(names_.size());
    names_.emplace_back(s);
    index_.emplace(names_.back(), idx);
    return idx;
  }
  std::vector<std::string> take() { return std::move(names_); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t, StringHash, StringEq> index_;
};

inline std::int64_t snap_to_grid(std::int64_t t, std::int64_t grid) {
  if (grid <= 1) return t;
  return floor_div(t + grid / 2, grid) * grid;
}

// Agent-schedule generation. Per-agent forked streams keep each agent's draws
// independent of every other agent.
inline GeneratedBatch generate_agent_mode(const ScenarioConfig& config) {
  GeneratedBatch batch;
  NameInterner users;
  NameInterner towers;
  for (const Tower& t : config.towers) towers.intern(t.tower_id);

  for (const AgentSpec& a : config.agents) users.intern(a.agent_id);
  for (const AgentSpec& a : config.agents)
    for (const std::string& c : a.contact_set) users.intern(c);

  batch.truth.agent_count = static_cast<std::int64_t>(config.agents.size());

  struct FirstCall {
    bool seen = false;
    std::uint32_t tower = 0;
    std::int64_t time = 0;
  };
  std::vector<FirstCall> first_call(config.agents.size());
  std::unordered_set<std::uint64_t> realized;

  SplitMix64 root(config.seed);
  for (std::size_t ai = 0; ai < config.agents.size(); ++ai) {
    const AgentSpec& agent = config.agents[ai];
    if (agent.contact_set.empty()) continue;
    SplitMix64 rng = root.fork(ai + 1);
    std::uint32_t caller = users.intern(agent.agent_id);
    for (int d = 0; d < config.days; ++d) {
      std::int64_t day_start = config.base_epoch + std::int64_t(d) * 86400;
      int dow = to_local(day_start + 12 * 3600, config.tz_offset_hours).day_of_week;
      for (const ScheduleWindow& w : agent.schedule) {
        if (!(w.day_mask & day_bit(dow))) continue;
        double hours = w.end_hour - w.start_hour;
        std::int64_t n_calls =
            agent.call_rate <= 0.0
                ? 0
                : std::max<std::int64_t>(1, std::llround(agent.call_rate * hours));
        std::int64_t window_start = day_start + std::int64_t(w.start_hour) * 3600;
        std::int64_t window_len = std::int64_t(w.end_hour - w.start_hour) * 3600;
        std::uint32_t tower = towers.intern(w.tower_id);
        for (std::int64_t k = 0; k < n_calls; ++k) {
          std::int64_t t = window_start +
                           static_cast<std::int64_t>(rng.next_below(
                               static_cast<std::uint64_t>(window_len)));
          if (agent.jitter_seconds > 0)
            t += rng.next_in(-agent.jitter_seconds, agent.jitter_seconds);
          t = snap_to_grid(t, config.time_grid_seconds);
          std::uint32_t callee = users.intern(
              agent.contact_set[rng.next_below(agent.contact_set.size())]);
          batch.calls.push_back(CompactCall{caller, callee, tower, t});
          std::uint64_t lo = std::min(caller, callee);
          std::uint64_t hi = std::max(caller, callee);
          realized.insert((lo << 32) | hi);
          if (!first_call[ai].seen)
            first_call[ai] = FirstCall{true, tower, t};
        }
      }
    }
  }

  // Top up unrealized contact edges. The top-up reuses the caller's first
  // emitted (tower, time) so it adds no new presence atom and therefore
  // cannot change any encounter.
  if (config.ensure_contact_coverage) {
    for (std::size_t ai = 0; ai < config.agents.size(); ++ai) {
      const AgentSpec& agent = config.agents[ai];
      if (!first_call[ai].seen) continue;
      std::uint32_t caller = users.intern(agent.agent_id);
      for (const std::string& c : agent.contact_set) {
        std::uint32_t callee = users.intern(c);
        std::uint64_t lo = std::min(caller, callee);
        std::uint64_t hi = std::max(caller, callee);
        if (realized.insert((lo << 32) | hi).second) {
          batch.calls.push_back(CompactCall{caller, callee, first_call[ai].tower,
                                            first_call[ai].time});
        }
      }
    }
  }

  batch.users = users.take();
  batch.towers = towers.take();
  for (std::uint64_t packed : realized)
    batch.truth.planted_edges.push_back(PairKey::canonical(
        batch.users[std::uint32_t(packed >> 32)],
        batch.users[std::uint32_t(packed & 0xffffffffu)]));
  std::sort(batch.truth.planted_edges.begin(), batch.truth.planted_edges.end());
  return batch;
}

// Gravity-mode generation: one exclusive two-hour slot per meeting, so no two
// synthetic pairs ever co-locate. Every member calls a dedicated buddy, which
// keeps all encountering pairs free of communication ties.
inline GeneratedBatch generate_gravity_mode(const ScenarioConfig& config) {
  const GravityPlan& plan = *config.gravity;
  GeneratedBatch batch;
  batch.truth.gravity_params = plan.params;
  NameInterner users;
  NameInterner towers;

  std::vector<const Tower*> sites;
  std::vector<double> weight;
  for (const Tower& t : config.towers) {
    auto it = plan.popularity.find(t.tower_id);
    if (it == plan.popularity.end()) continue;
    sites.push_back(&t);
    weight.push_back(it->second);
    towers.intern(t.tower_id);
  }
  const std::size_t n = sites.size();

  // Rounded target transition counts per ordered tower pair.
  std::vector<std::vector<std::int64_t>> target(n, std::vector<std::int64_t>(n, 0));
  std::vector<std::int64_t> realized_episodes(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      double d = haversine_km(*sites[i], *sites[j]);
      if (d <= 0.0)
        fail("scenario: gravity mode: towers " + sites[i]->tower_id + " and " +
             sites[j]->tower_id + " are co-located");
      double t = plan.params.c * std::pow(weight[i], plan.params.alpha) *
                 std::pow(weight[j], plan.params.beta) /
                 std::pow(d, plan.params.gamma);
      target[i][j] = std::llround(t);
      realized_episodes[i] += target[i][j];
      realized_episodes[j] += target[i][j];
      batch.truth.gravity_transitions += target[i][j];
    }
  }

  // Popularity filler: pad every tower to scale * weight episodes so realized
  // popularity stays exactly proportional to the planted weights.
  std::int64_t scale = 1;
  for (std::size_t i = 0; i < n; ++i) {
    auto needed = static_cast<std::int64_t>(
        std::ceil(static_cast<double>(realized_episodes[i]) / weight[i]));
    scale = std::max(scale, needed);
  }
  batch.truth.gravity_popularity_scale = scale;

  std::int64_t slot = 0;
  std::int64_t seq = 0;
  constexpr std::int64_t kSlotPitch = 7200;
  char buf[32];
  auto make_user = [&](std::int64_t s, const char* suffix) {
    std::snprintf(buf, sizeof(buf), "u%08lld%s", static_cast<long long>(s), suffix);
    return users.intern(buf);
  };
  auto meet = [&](std::uint32_t m1, std::uint32_t b1, std::uint32_t m2,
                  std::uint32_t b2, std::uint32_t tower) {
    std::int64_t t = config.base_epoch + slot * kSlotPitch;
    batch.calls.push_back(CompactCall{m1, b1, tower, t});
    batch.calls.push_back(CompactCall{m2, b2, tower, t + 60});
    ++slot;
  };

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      std::uint32_t tower_i = towers.intern(sites[i]->tower_id);
      std::uint32_t tower_j = towers.intern(sites[j]->tower_id);
      for (std::int64_t k = 0; k < target[i][j]; ++k) {
        std::uint32_t a = make_user(seq, "a");
        std::uint32_t ab = make_user(seq, "ax");
        std::uint32_t b = make_user(seq, "b");
        std::uint32_t bb = make_user(seq, "bx");
        ++seq;
        meet(a, ab, b, bb, tower_i);
        meet(a, ab, b, bb, tower_j);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::int64_t fillers = scale * static_cast<std::int64_t>(weight[i]) -
                           realized_episodes[i];
    std::uint32_t tower = towers.intern(sites[i]->tower_id);
    for (std::int64_t k = 0; k < fillers; ++k) {
      std::uint32_t a = make_user(seq, "a");
      std::uint32_t ab = make_user(seq, "ax");
      std::uint32_t b = make_user(seq, "b");
      std::uint32_t bb = make_user(seq, "bx");
      ++seq;
      meet(a, ab, b, bb, tower);
    }
  }

  batch.users = users.take();
  batch.towers = towers.take();
  std::unordered_set<std::uint64_t> realized;
  for (const CompactCall& c : batch.calls) {
    std::uint64_t lo = std::min(c.caller, c.callee);
    std::uint64_t hi = std::max(c.caller, c.callee);
    realized.insert((lo << 32) | hi);
  }
  for (std::uint64_t packed : realized)
    batch.truth.planted_edges.push_back(PairKey::canonical(
        batch.users[std::uint32_t(packed >> 32)],
        batch.users[std::uint32_t(packed & 0xffffffffu)]));
  std::sort(batch.truth.planted_edges.begin(), batch.truth.planted_edges.end());
  return batch;
}

inline GeneratedBatch generate_batch(const ScenarioConfig& config) {
  config.validate();
  GeneratedBatch batch =
      config.gravity ? generate_gravity_mode(config) : generate_agent_mode(config);
  std::sort(batch.calls.begin(), batch.calls.end());
  batch.truth.record_count = static_cast<std::int64_t>(batch.calls.size());
  return batch;
}

}  // namespace detail

/// Deterministic for a given config (seed included): two runs produce
/// byte-identical record streams. Output sorted by start_time.
inline std::vector<CallRecord> generate_cdr(const ScenarioConfig& config) {
  detail::GeneratedBatch batch = detail::generate_batch(config);
  std::vector<CallRecord> records;
  records.reserve(batch.calls.size());
  for (const auto& c : batch.calls)
    records.push_back(CallRecord{batch.users[c.caller], batch.users[c.callee],
                                 batch.towers[c.tower], c.start,
                                 c.start + config.call_duration_seconds});
  return records;
}

/// Streams the generated records as CDR CSV without materializing them.
inline GeneratedTruth generate_cdr_csv(std::ostream& os, const ScenarioConfig& config) {
  detail::GeneratedBatch batch = detail::generate_batch(config);
  std::string line;
  for (const auto& c : batch.calls) {
    line.clear();
    line += batch.users[c.caller];
    line += ',';
    line += batch.users[c.callee];
    line += ',';
    line += batch.towers[c.tower];
    line += ',';
    csv::append(line, c.start);
    line += ',';
    csv::append(line, c.start + config.call_duration_seconds);
    line += '\n';
    os << line;
  }
  return std::move(batch.truth);
}

/// Evaluates T_ij = C * N_i^alpha * N_j^beta / D_ij^gamma over every ordered
/// tower pair with planted popularity, optionally multiplied by lognormal
/// noise exp(eps), eps ~ Normal(0, sigma^2). Noise-free mode emits exact real
/// values. Zero-distance pairs are skipped; fully co-located geometry throws.
inline FlowMatrix generate_gravity_flows(const TowerTable& towers,
                                         const std::map<std::string, double>& popularity,
                                         const GravityParams& params,
                                         double noise_sigma, std::uint64_t seed) {
  if (noise_sigma < 0) fail("generate_gravity_flows: negative noise_sigma");
  FlowMatrix out;
  std::vector<const Tower*> sites;
  for (const auto& [id, weight] : popularity) {
    const Tower* t = towers.find(id);
    if (!t) fail("generate_gravity_flows: unknown tower " + id);
    if (weight <= 0) fail("generate_gravity_flows: popularity must be positive");
    sites.push_back(t);
    out.popularity[id] = weight;
  }
  if (sites.size() < 2) fail("generate_gravity_flows: need >= 2 towers");

  bool any_positive_distance = false;
  SplitMix64 rng(seed);
  for (const Tower* a : sites) {
    for (const Tower* b : sites) {
      if (a == b) continue;
      double d = haversine_km(*a, *b);
      if (d <= 0.0) continue;
      any_positive_distance = true;
      double flow = params.c * std::pow(popularity.at(a->tower_id), params.alpha) *
                    std::pow(popularity.at(b->tower_id), params.beta) /
                    std::pow(d, params.gamma);
      if (noise_sigma > 0) flow *= std::exp(noise_sigma * rng.next_normal());
      out.flows[{a->tower_id, b->tower_id}] = flow;
    }
  }
  if (!any_positive_distance)
    fail("generate_gravity_flows: degenerate geometry (all towers co-located)");
  return out;
}

}  // namespace atlas

#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "atlas/synthgen.hpp"

namespace atlas {

namespace detail {

inline std::string seq_name(const char* prefix, int width, std::int64_t n,
                            const char* suffix = "") {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%s%0*lld%s", prefix, width,
                static_cast<long long>(n), suffix);
  return buf;
}

// Keeps generated coordinates on a clean micro-degree lattice.
inline double grid_coord(double v) { return std::round(v * 1e6) / 1e6; }

constexpr std::array<std::string_view, 6> kPoiCategories = {
    "food", "culture", "stadium", "event", "wellness", "nature"};

}  // namespace detail

inline TowerTable make_tower_grid(int rows, int cols, double lat0, double lon0,
                                  double dlat, double dlon, const char* prefix,
                                  bool with_poi) {
  TowerTable towers;
  for (int i = 0; i < rows * cols; ++i) {
    Tower t;
    t.tower_id = detail::seq_name(prefix, 3, i);
    t.latitude = detail::grid_coord(lat0 + (i / cols) * dlat);
    t.longitude = detail::grid_coord(lon0 + (i % cols) * dlon);
    if (with_poi)
      t.poi_category = std::string(detail::kPoiCategories[i % detail::kPoiCategories.size()]);
    towers.add(std::move(t));
  }
  return towers;
}

// Geometric spread of planted popularity weights across the table.
inline std::map<std::string, double> log_spread_popularity(const TowerTable& towers,
                                                           double lo, double hi) {
  std::map<std::string, double> popularity;
  const auto n = static_cast<double>(towers.size());
  std::size_t i = 0;
  for (const Tower& t : towers) {
    double f = n > 1 ? static_cast<double>(i) / (n - 1) : 0.0;
    popularity[t.tower_id] = std::round(lo * std::pow(hi / lo, f));
    ++i;
  }
  return popularity;
}

// Pairs sharing a daily two-hour meeting window on a half-hour timetable with
// +/-30 min jitter. Each member's only contact is a dedicated phone buddy, so
// every co-locating pair stays free of communication ties.
inline ScenarioConfig make_commuters_scenario(std::uint64_t seed = 42,
                                              int pair_count = 300) {
  ScenarioConfig config;
  config.days = 7;
  config.tz_offset_hours = 2;
  config.seed = seed;
  config.base_epoch = default_base_epoch(2);
  config.time_grid_seconds = 1800;
  for (int p = 0; p < pair_count; ++p) {
    Tower t;
    t.tower_id = detail::seq_name("C", 3, p);
    t.latitude = detail::grid_coord(42.40 + (p % 20) * 0.01);
    t.longitude = detail::grid_coord(1.40 + (p / 20) * 0.012);
    t.poi_category = std::string(detail::kPoiCategories[p % detail::kPoiCategories.size()]);
    config.towers.add(std::move(t));
  }
  for (int p = 0; p < pair_count; ++p) {
    std::string tower = detail::seq_name("C", 3, p);
    for (const char* side : {"a", "b"}) {
      AgentSpec agent;
      agent.agent_id = detail::seq_name("c", 3, p, side);
      agent.home_tower = tower;
      agent.work_tower = tower;
      agent.call_rate = 0.5;  // one call per two-hour window
      agent.jitter_seconds = 1800;
      agent.contact_set = {agent.agent_id + "x"};  // buddy, never co-located
      agent.schedule.push_back(ScheduleWindow{kAllDays, 8, 10, tower});
      config.agents.push_back(std::move(agent));
    }
  }
  return config;
}

// Disjoint weekday-only and weekend-only routines, plus a Saturday-night
// crowd. No pair ever spans both day classes.
inline ScenarioConfig make_weekend_crowd_scenario(std::uint64_t seed = 43) {
  ScenarioConfig config;
  config.days = 7;
  config.tz_offset_hours = 2;
  config.seed = seed;
  config.base_epoch = default_base_epoch(2);
  constexpr int kWeekdayPairs = 150;
  constexpr int kWeekendPairs = 150;
  constexpr int kNightlifePairs = 50;
  const int total = kWeekdayPairs + kWeekendPairs + kNightlifePairs;
  for (int p = 0; p < total; ++p) {
    Tower t;
    t.tower_id = detail::seq_name("W", 3, p);
    t.latitude = detail::grid_coord(42.45 + (p % 25) * 0.008);
    t.longitude = detail::grid_coord(1.45 + (p / 25) * 0.01);
    t.poi_category = std::string(detail::kPoiCategories[p % detail::kPoiCategories.size()]);
    config.towers.add(std::move(t));
  }
  auto add_pair = [&](int p, std::uint8_t days, int hour) {
    std::string tower = detail::seq_name("W", 3, p);
    for (const char* side : {"a", "b"}) {
      AgentSpec agent;
      agent.agent_id = detail::seq_name("w", 3, p, side);
      agent.home_tower = tower;
      agent.work_tower = tower;
      agent.call_rate = 1.0;
      agent.jitter_seconds = 600;
      agent.contact_set = {agent.agent_id + "x"};
      agent.schedule.push_back(ScheduleWindow{days, hour, hour + 1, tower});
      config.agents.push_back(std::move(agent));
    }
  };
  int p = 0;
  for (int i = 0; i < kWeekdayPairs; ++i, ++p) add_pair(p, kWeekdays, 8 + i % 3);
  for (int i = 0; i < kWeekendPairs; ++i, ++p) add_pair(p, kWeekendDays, 10 + i % 3);
  for (int i = 0; i < kNightlifePairs; ++i, ++p) add_pair(p, day_bit(5), 22);
  return config;
}

// 4x5 tower grid with geometrically spread weights; flows realized directly
// from the gravity law so the fit can be checked against planted exponents.
inline ScenarioConfig make_gravity_grid_scenario(std::uint64_t seed = 44) {
  ScenarioConfig config;
  config.days = 7;
  config.tz_offset_hours = 2;
  config.seed = seed;
  config.base_epoch = default_base_epoch(2);
  config.towers = make_tower_grid(4, 5, 42.44, 1.40, 0.018, 0.024, "G", true);
  GravityPlan plan;
  plan.params = GravityParams{10.0, 0.38, 0.407, 0.823};
  plan.popularity = log_spread_popularity(config.towers, 40.0, 400.0);
  config.gravity = std::move(plan);
  return config;
}

// A controlled fraction of encountering pairs also call each other; the rest
// only call outside buddies.
inline ScenarioConfig make_overlap_scenario(std::uint64_t seed = 45,
                                            int pair_count = 200,
                                            double comm_edge_fraction = 0.2) {
  ScenarioConfig config;
  config.days = 7;
  config.tz_offset_hours = 2;
  config.seed = seed;
  config.base_epoch = default_base_epoch(2);
  const int with_edge = static_cast<int>(std::llround(pair_count * comm_edge_fraction));
  for (int p = 0; p < pair_count; ++p) {
    Tower t;
    t.tower_id = detail::seq_name("V", 3, p);
    t.latitude = detail::grid_coord(42.42 + (p % 20) * 0.009);
    t.longitude = detail::grid_coord(1.42 + (p / 20) * 0.011);
    t.poi_category = std::string(detail::kPoiCategories[p % detail::kPoiCategories.size()]);
    config.towers.add(std::move(t));
  }
  for (int p = 0; p < pair_count; ++p) {
    std::string tower = detail::seq_name("V", 3, p);
    std::string id_a = detail::seq_name("v", 3, p, "a");
    std::string id_b = detail::seq_name("v", 3, p, "b");
    int meetings = 1 + p % 3;
    std::uint8_t days = 0;
    for (int m = 0; m < meetings; ++m) days |= day_bit(m);
    int hour = 8 + p % 10;
    for (const std::string& id : {id_a, id_b}) {
      AgentSpec agent;
      agent.agent_id = id;
      agent.home_tower = tower;
      agent.work_tower = tower;
      agent.call_rate = 1.0;
      agent.jitter_seconds = 0;
      if (p < with_edge)
        agent.contact_set = {id == id_a ? id_b : id_a};
      else
        agent.contact_set = {id + "x"};
      agent.schedule.push_back(ScheduleWindow{days, hour, hour + 1, tower});
      config.agents.push_back(std::move(agent));
    }
  }
  return config;
}

// Chain-structured contact graph; pairs at hop distance k meet 12-k times, so
// encounter frequency decays with planted social distance.
inline ScenarioConfig make_social_decay_scenario(std::uint64_t seed = 46) {
  ScenarioConfig config;
  config.days = 7;
  config.tz_offset_hours = 2;
  config.seed = seed;
  config.base_epoch = default_base_epoch(2);
  constexpr int kChain = 30;

  std::vector<AgentSpec> agents(kChain);
  for (int i = 0; i < kChain; ++i) {
    agents[i].agent_id = detail::seq_name("s", 2, i);
    agents[i].call_rate = 1.0;
    agents[i].jitter_seconds = 0;
    if (i > 0) agents[i].contact_set.push_back(detail::seq_name("s", 2, i - 1));
    if (i + 1 < kChain) agents[i].contact_set.push_back(detail::seq_name("s", 2, i + 1));
  }

  int pair_seq = 0;
  for (int k = 2; k <= 8; ++k) {
    for (int i = 0; i + k < kChain; ++i) {
      std::string tower = detail::seq_name("M", 3, pair_seq);
      Tower t;
      t.tower_id = tower;
      t.latitude = detail::grid_coord(42.41 + (pair_seq % 14) * 0.009);
      t.longitude = detail::grid_coord(1.41 + (pair_seq / 14) * 0.012);
      config.towers.add(std::move(t));
      int meetings = 12 - k;
      for (int m = 0; m < meetings; ++m) {
        int day = m % 7;
        int hour = 8 + 3 * (m / 7);
        ScheduleWindow w{day_bit(day), hour, hour + 1, tower};
        agents[i].schedule.push_back(w);
        agents[i + k].schedule.push_back(w);
      }
      ++pair_seq;
    }
  }
  for (AgentSpec& a : agents) {
    a.home_tower = a.schedule.empty() ? config.towers.begin()->tower_id
                                      : a.schedule.front().tower_id;
    a.work_tower = a.home_tower;
  }
  config.agents = std::move(agents);
  return config;
}

// Bulk dataset: every pair holds a daily one-hour meeting in an exclusive
// (tower, 3-hour slot, day) cell, so the co-location structure stays exactly
// planted at any size. Record count = pair_count * 2 * days * 9.
inline ScenarioConfig make_scale_scenario(int pair_count = 80000,
                                          std::uint64_t seed = 7) {
  ScenarioConfig config;
  config.days = 7;
  config.tz_offset_hours = 2;
  config.seed = seed;
  config.base_epoch = default_base_epoch(2);
  const std::int64_t cells = static_cast<std::int64_t>(pair_count) * 7;
  const std::int64_t n_towers = (cells + 55) / 56;
  for (std::int64_t i = 0; i < n_towers; ++i) {
    Tower t;
    t.tower_id = detail::seq_name("T", 5, i);
    t.latitude = detail::grid_coord(42.0 + (i / 100) * 0.005);
    t.longitude = detail::grid_coord(1.0 + (i % 100) * 0.005);
    t.poi_category = std::string(detail::kPoiCategories[i % detail::kPoiCategories.size()]);
    config.towers.add(std::move(t));
  }
  config.agents.reserve(static_cast<std::size_t>(pair_count) * 2);
  for (std::int64_t p = 0; p < pair_count; ++p) {
    const int hour = static_cast<int>(3 * (p % 8));
    for (const char* side : {"a", "b"}) {
      AgentSpec agent;
      agent.agent_id = detail::seq_name("u", 6, p, side);
      agent.call_rate = 9.0;
      agent.jitter_seconds = 600;
      agent.contact_set = {agent.agent_id + "x"};
      // contiguous day runs sharing a tower collapse into one window
      int run_start = 0;
      std::int64_t run_tower = (7 * p) / 56;
      for (int d = 1; d <= 7; ++d) {
        std::int64_t tower = d < 7 ? (7 * p + d) / 56 : -1;
        if (tower != run_tower) {
          std::uint8_t mask = 0;
          for (int x = run_start; x < d; ++x) mask |= day_bit(x);
          agent.schedule.push_back(ScheduleWindow{
              mask, hour, hour + 1, detail::seq_name("T", 5, run_tower)});
          run_start = d;
          run_tower = tower;
        }
      }
      agent.home_tower = agent.schedule.front().tower_id;
      agent.work_tower = agent.home_tower;
      config.agents.push_back(std::move(agent));
    }
  }
  return config;
}

inline std::optional<ScenarioConfig> scenario_preset(std::string_view name) {
  if (name == "commuters") return make_commuters_scenario();
  if (name == "weekend-crowd") return make_weekend_crowd_scenario();
  if (name == "gravity-grid") return make_gravity_grid_scenario();
  if (name == "overlap") return make_overlap_scenario();
  if (name == "social-decay") return make_social_decay_scenario();
  if (name == "scale") return make_scale_scenario();
  return std::nullopt;
}

inline std::vector<std::string_view> scenario_preset_names() {
  return {"commuters", "weekend-crowd", "gravity-grid",
          "overlap",   "social-decay",  "scale"};
}

}  // namespace atlas

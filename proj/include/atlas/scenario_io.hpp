#pragma once

#include <array>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "atlas/core.hpp"
#include "atlas/csv.hpp"
#include "atlas/synthgen.hpp"

namespace atlas {

namespace detail {

constexpr std::array<std::string_view, 7> kDayNames = {"mon", "tue", "wed", "thu",
                                                       "fri", "sat", "sun"};

inline int day_index(std::string_view name) {
  for (int i = 0; i < 7; ++i)
    if (kDayNames[i] == name) return i;
  return -1;
}

inline std::uint8_t parse_day_set(std::string_view text) {
  if (text == "all") return kAllDays;
  std::uint8_t mask = 0;
  std::vector<std::string_view> parts;
  csv::split(text, ',', parts);
  for (std::string_view part : parts) {
    auto dash = part.find('-');
    if (dash != std::string_view::npos) {
      int lo = day_index(part.substr(0, dash));
      int hi = day_index(part.substr(dash + 1));
      if (lo < 0 || hi < 0 || lo > hi) fail("bad day range '" + std::string(part) + "'");
      for (int d = lo; d <= hi; ++d) mask |= day_bit(d);
    } else {
      int d = day_index(part);
      if (d < 0) fail("bad day name '" + std::string(part) + "'");
      mask |= day_bit(d);
    }
  }
  if (mask == 0) fail("empty day set");
  return mask;
}

inline std::string format_day_set(std::uint8_t mask) {
  if (mask == kAllDays) return "all";
  std::string out;
  int d = 0;
  while (d < 7) {
    if (!(mask & day_bit(d))) {
      ++d;
      continue;
    }
    int end = d;
    while (end + 1 < 7 && (mask & day_bit(end + 1))) ++end;
    if (!out.empty()) out += ',';
    out += kDayNames[d];
    if (end > d) {
      out += '-';
      out += kDayNames[end];
    }
    d = end + 1;
  }
  return out;
}

inline void tokenize(std::string_view line, std::vector<std::string_view>& out) {
  out.clear();
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
}

}  // namespace detail

/// Scenario text format: one directive per line, '#' comments. Agent blocks
/// open with `agent <id>` and close with `end`.
inline ScenarioConfig parse_scenario(std::string_view text) {
  ScenarioConfig config;
  config.agents.clear();
  bool base_epoch_set = false;
  AgentSpec* current = nullptr;
  std::vector<std::string_view> tok;
  std::vector<std::string_view> list;

  csv::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    detail::tokenize(line, tok);
    if (tok.empty()) return;
    auto ctx = [&](const std::string& msg) -> std::string {
      return "scenario: line " + std::to_string(line_no) + ": " + msg;
    };
    auto need = [&](std::size_t n) {
      if (tok.size() != n + 1)
        fail(ctx("directive '" + std::string(tok[0]) + "' expects " +
                 std::to_string(n) + " arguments"));
    };
    auto as_i64 = [&](std::string_view s) {
      std::int64_t v;
      if (!csv::parse_i64(s, v)) fail(ctx("invalid integer '" + std::string(s) + "'"));
      return v;
    };
    auto as_double = [&](std::string_view s) {
      double v;
      if (!csv::parse_double(s, v)) fail(ctx("invalid number '" + std::string(s) + "'"));
      return v;
    };

    std::string_view key = tok[0];
    if (current) {
      if (key == "end") {
        need(0);
        current = nullptr;
      } else if (key == "home") {
        need(1);
        current->home_tower = std::string(tok[1]);
      } else if (key == "work") {
        need(1);
        current->work_tower = std::string(tok[1]);
      } else if (key == "call_rate") {
        need(1);
        current->call_rate = as_double(tok[1]);
      } else if (key == "jitter") {
        need(1);
        current->jitter_seconds = as_i64(tok[1]);
      } else if (key == "contacts") {
        need(1);
        csv::split(tok[1], ',', list);
        for (std::string_view c : list)
          if (!c.empty()) current->contact_set.emplace_back(c);
      } else if (key == "window") {
        need(3);
        ScheduleWindow w;
        try {
          w.day_mask = detail::parse_day_set(tok[1]);
        } catch (const Error& e) {
          fail(ctx(e.what()));
        }
        auto dash = tok[2].find('-');
        if (dash == std::string_view::npos) fail(ctx("window hours must be h0-h1"));
        w.start_hour = static_cast<int>(as_i64(tok[2].substr(0, dash)));
        w.end_hour = static_cast<int>(as_i64(tok[2].substr(dash + 1)));
        w.tower_id = std::string(tok[3]);
        current->schedule.push_back(std::move(w));
      } else {
        fail(ctx("unknown agent directive '" + std::string(key) + "'"));
      }
      return;
    }

    if (key == "days") {
      need(1);
      config.days = static_cast<int>(as_i64(tok[1]));
    } else if (key == "tz_offset") {
      need(1);
      config.tz_offset_hours = static_cast<int>(as_i64(tok[1]));
    } else if (key == "seed") {
      need(1);
      std::uint64_t v;
      if (!csv::parse_u64(tok[1], v)) fail(ctx("invalid seed"));
      config.seed = v;
    } else if (key == "base_epoch") {
      need(1);
      config.base_epoch = as_i64(tok[1]);
      base_epoch_set = true;
    } else if (key == "time_grid") {
      need(1);
      config.time_grid_seconds = as_i64(tok[1]);
    } else if (key == "call_duration") {
      need(1);
      config.call_duration_seconds = as_i64(tok[1]);
    } else if (key == "coverage") {
      need(1);
      if (tok[1] == "on")
        config.ensure_contact_coverage = true;
      else if (tok[1] == "off")
        config.ensure_contact_coverage = false;
      else
        fail(ctx("coverage must be on or off"));
    } else if (key == "tower") {
      if (tok.size() != 4 && tok.size() != 5) fail(ctx("tower expects id lat lon [poi]"));
      Tower t;
      t.tower_id = std::string(tok[1]);
      t.latitude = as_double(tok[2]);
      t.longitude = as_double(tok[3]);
      if (tok.size() == 5) t.poi_category = std::string(tok[4]);
      try {
        config.towers.add(std::move(t));
      } catch (const Error& e) {
        fail(ctx(e.what()));
      }
    } else if (key == "gravity") {
      need(4);
      GravityPlan plan;
      if (config.gravity) plan = *config.gravity;
      plan.params.c = as_double(tok[1]);
      plan.params.alpha = as_double(tok[2]);
      plan.params.beta = as_double(tok[3]);
      plan.params.gamma = as_double(tok[4]);
      config.gravity = std::move(plan);
    } else if (key == "popularity") {
      need(2);
      if (!config.gravity) fail(ctx("popularity requires a preceding gravity line"));
      config.gravity->popularity[std::string(tok[1])] = as_double(tok[2]);
    } else if (key == "agent") {
      need(1);
      config.agents.push_back(AgentSpec{});
      current = &config.agents.back();
      current->agent_id = std::string(tok[1]);
    } else {
      fail(ctx("unknown directive '" + std::string(key) + "'"));
    }
  });
  if (current) fail("scenario: unterminated agent block for " + current->agent_id);
  if (!base_epoch_set) config.base_epoch = default_base_epoch(config.tz_offset_hours);
  config.validate();
  return config;
}

inline void write_scenario(std::ostream& os, const ScenarioConfig& config) {
  os << "days " << config.days << '\n'
     << "tz_offset " << config.tz_offset_hours << '\n'
     << "seed " << config.seed << '\n'
     << "base_epoch " << config.base_epoch << '\n'
     << "time_grid " << config.time_grid_seconds << '\n'
     << "call_duration " << config.call_duration_seconds << '\n'
     << "coverage " << (config.ensure_contact_coverage ? "on" : "off") << '\n';
  for (const Tower& t : config.towers) {
    os << "tower " << t.tower_id << ' ' << csv::format(t.latitude) << ' '
       << csv::format(t.longitude);
    if (t.has_poi()) os << ' ' << t.poi_category;
    os << '\n';
  }
  if (config.gravity) {
    const GravityPlan& plan = *config.gravity;
    os << "gravity " << csv::format(plan.params.c) << ' '
       << csv::format(plan.params.alpha) << ' ' << csv::format(plan.params.beta)
       << ' ' << csv::format(plan.params.gamma) << '\n';
    for (const auto& [tower, weight] : plan.popularity)
      os << "popularity " << tower << ' ' << csv::format(weight) << '\n';
  }
  for (const AgentSpec& a : config.agents) {
    os << "agent " << a.agent_id << '\n';
    if (!a.home_tower.empty()) os << "  home " << a.home_tower << '\n';
    if (!a.work_tower.empty()) os << "  work " << a.work_tower << '\n';
    os << "  call_rate " << csv::format(a.call_rate) << '\n';
    if (a.jitter_seconds) os << "  jitter " << a.jitter_seconds << '\n';
    if (!a.contact_set.empty()) {
      os << "  contacts ";
      for (std::size_t i = 0; i < a.contact_set.size(); ++i) {
        if (i) os << ',';
        os << a.contact_set[i];
      }
      os << '\n';
    }
    for (const ScheduleWindow& w : a.schedule)
      os << "  window " << detail::format_day_set(w.day_mask) << ' ' << w.start_hour
         << '-' << w.end_hour << ' ' << w.tower_id << '\n';
    os << "end\n";
  }
}

}  // namespace atlas

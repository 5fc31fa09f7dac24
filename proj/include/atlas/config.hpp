#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "atlas/core.hpp"
#include "atlas/csv.hpp"

namespace atlas {

enum class PresenceAttribution { caller_only, both_parties };

inline std::string_view to_string(PresenceAttribution a) {
  return a == PresenceAttribution::caller_only ? "caller_only" : "both_parties";
}

// Encounter-count buckets for the distance curve: disjoint ascending
// inclusive ranges. hi == unbounded() marks an open-ended final bucket.
struct BucketSpec {
  static constexpr std::int64_t unbounded() { return INT64_MAX; }

  std::vector<std::pair<std::int64_t, std::int64_t>> ranges;

  // "1,2,3,4,5-9,10+"
  static BucketSpec parse(std::string_view text) {
    BucketSpec spec;
    std::vector<std::string_view> parts;
    csv::split(text, ',', parts);
    for (std::string_view part : parts) {
      if (part.empty()) fail("bucket spec: empty bucket in '" + std::string(text) + "'");
      std::int64_t lo = 0, hi = 0;
      if (part.back() == '+') {
        if (!csv::parse_i64(part.substr(0, part.size() - 1), lo))
          fail("bucket spec: bad bucket '" + std::string(part) + "'");
        hi = unbounded();
      } else if (auto dash = part.find('-'); dash != std::string_view::npos) {
        if (!csv::parse_i64(part.substr(0, dash), lo) ||
            !csv::parse_i64(part.substr(dash + 1), hi))
          fail("bucket spec: bad bucket '" + std::string(part) + "'");
      } else {
        if (!csv::parse_i64(part, lo))
          fail("bucket spec: bad bucket '" + std::string(part) + "'");
        hi = lo;
      }
      spec.ranges.emplace_back(lo, hi);
    }
    spec.validate();
    return spec;
  }

  static BucketSpec default_counts() { return parse("1,2,3,4,5-9,10+"); }

  void validate() const {
    if (ranges.empty()) fail("bucket spec: no buckets");
    std::int64_t prev_hi = 0;
    bool first = true;
    for (auto [lo, hi] : ranges) {
      if (lo > hi) fail("bucket spec: inverted bucket");
      if (!first && lo <= prev_hi) fail("bucket spec: buckets overlap or not ascending");
      prev_hi = hi;
      first = false;
    }
  }

  // Index of the bucket containing `count`, or -1.
  int bucket_of(std::int64_t count) const {
    for (std::size_t i = 0; i < ranges.size(); ++i)
      if (count >= ranges[i].first && count <= ranges[i].second)
        return static_cast<int>(i);
    return -1;
  }

  std::string to_string() const {
    std::string out;
    for (std::size_t i = 0; i < ranges.size(); ++i) {
      if (i) out += ',';
      auto [lo, hi] = ranges[i];
      out += csv::format(lo);
      if (hi == unbounded())
        out += '+';
      else if (hi != lo)
        out += '-' + csv::format(hi);
    }
    return out;
  }
};

// Analysis knobs. Defaults here are the single source of truth; file config
// overrides defaults and CLI flags override the file.
struct AnalysisConfig {
  std::int64_t window_seconds = 3600;
  std::int64_t max_degree = 100;
  std::int64_t iet_bin_seconds = 3600;
  std::int64_t min_edge_pairs = 2000;
  double distance_floor_km = 0.1;
  PresenceAttribution presence_attribution = PresenceAttribution::caller_only;
  std::uint64_t rng_seed = 1;
  int tz_offset_hours = 2;  // hour-of-day bucketing is meaningless without a zone
  BucketSpec distance_buckets = BucketSpec::default_counts();

  void validate() const {
    if (window_seconds <= 0) fail("config: window_seconds must be positive");
    if (iet_bin_seconds <= 0) fail("config: iet_bin_seconds must be positive");
    if (max_degree <= 0) fail("config: max_degree must be positive");
    if (min_edge_pairs < 0) fail("config: min_edge_pairs must be nonnegative");
    if (distance_floor_km < 0) fail("config: distance_floor_km must be nonnegative");
    if (tz_offset_hours < -14 || tz_offset_hours > 14)
      fail("config: tz_offset_hours out of range [-14, 14]");
    distance_buckets.validate();
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace detail

inline void apply_config_entry(AnalysisConfig& cfg, std::string_view key,
                               std::string_view value) {
  auto want_i64 = [&](std::int64_t& out) {
    if (!csv::parse_i64(value, out))
      fail("config: key '" + std::string(key) + "': invalid integer '" +
           std::string(value) + "'");
  };
  if (key == "window_seconds") {
    want_i64(cfg.window_seconds);
  } else if (key == "max_degree") {
    want_i64(cfg.max_degree);
  } else if (key == "iet_bin_seconds") {
    want_i64(cfg.iet_bin_seconds);
  } else if (key == "min_edge_pairs") {
    want_i64(cfg.min_edge_pairs);
  } else if (key == "distance_floor_km") {
    if (!csv::parse_double(value, cfg.distance_floor_km))
      fail("config: invalid distance_floor_km");
  } else if (key == "presence_attribution") {
    if (value == "caller_only")
      cfg.presence_attribution = PresenceAttribution::caller_only;
    else if (value == "both_parties")
      cfg.presence_attribution = PresenceAttribution::both_parties;
    else
      fail("config: presence_attribution must be caller_only or both_parties");
  } else if (key == "rng_seed") {
    if (!csv::parse_u64(value, cfg.rng_seed)) fail("config: invalid rng_seed");
  } else if (key == "tz_offset_hours") {
    std::int64_t v;
    want_i64(v);
    cfg.tz_offset_hours = static_cast<int>(v);
  } else if (key == "distance_buckets") {
    cfg.distance_buckets = BucketSpec::parse(value);
  } else {
    fail("config: unknown key '" + std::string(key) + "'");
  }
}

/// key=value lines; '#' starts a comment; blank lines ignored.
inline AnalysisConfig load_config(std::string_view text, AnalysisConfig base = {}) {
  csv::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) return;
    auto eq = line.find('=');
    if (eq == std::string_view::npos)
      fail("config: line " + std::to_string(line_no) + ": expected key=value");
    try {
      apply_config_entry(base, detail::trim(line.substr(0, eq)),
                         detail::trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      fail("config: line " + std::to_string(line_no) + ": " + e.what());
    }
  });
  base.validate();
  return base;
}

}  // namespace atlas

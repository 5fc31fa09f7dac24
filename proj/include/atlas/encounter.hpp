#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "atlas/cdr.hpp"
#include "atlas/config.hpp"
#include "atlas/core.hpp"

namespace atlas {

// One inferred (user, tower, time) observation.
struct PresenceEvent {
  std::string user_id;
  std::string tower_id;
  std::int64_t timestamp = 0;

  friend bool operator==(const PresenceEvent&, const PresenceEvent&) = default;
};

// Unordered user pair stored canonically: user_a < user_b bytewise.
struct PairKey {
  std::string user_a;
  std::string user_b;

  static PairKey canonical(std::string a, std::string b) {
    if (a == b) fail("pair key: identical users");
    if (b < a) std::swap(a, b);
    return PairKey{std::move(a), std::move(b)};
  }

  auto operator<=>(const PairKey&) const = default;
};

struct PairKeyHash {
  std::size_t operator()(const PairKey& k) const {
    std::uint64_t h = fnv1a64(k.user_a.data(), k.user_a.size());
    h = fnv1a64("\x1f", 1, h);
    return fnv1a64(k.user_b.data(), k.user_b.size(), h);
  }
};

// A merged co-location of one pair at one tower.
//
// Raw co-occurrence: two presence events of distinct users at the same tower
// with |t_a - t_b| <= window. Each co-occurrence is stamped with the later of
// its two event times; co-occurrences of the same (pair, tower) merge into one
// episode while the gap between consecutive stamps stays <= window.
// first_time/last_time span every event involved in the merged co-occurrences
// and event_count tallies the raw co-occurrences merged.
struct EncounterEpisode {
  PairKey pair;
  std::string tower_id;
  std::int64_t first_time = 0;
  std::int64_t last_time = 0;
  std::int64_t event_count = 0;

  friend bool operator==(const EncounterEpisode&, const EncounterEpisode&) = default;

  // Output order: (pair, first_time, tower_id), then remaining fields.
  static bool canonical_less(const EncounterEpisode& a, const EncounterEpisode& b) {
    return std::tie(a.pair, a.first_time, a.tower_id, a.last_time, a.event_count) <
           std::tie(b.pair, b.first_time, b.tower_id, b.last_time, b.event_count);
  }
};

/// caller_only: one event per record (caller at tower at start_time);
/// both_parties: additionally the callee at the same tower and time.
/// Exact duplicate (user, tower, timestamp) triples collapse to one; output
/// sorted by (timestamp, user_id, tower_id).
inline std::vector<PresenceEvent> extract_presence(std::span<const CallRecord> records,
                                                   PresenceAttribution policy) {
  std::vector<PresenceEvent> events;
  events.reserve(records.size() *
                 (policy == PresenceAttribution::both_parties ? 2 : 1));
  for (const CallRecord& r : records) {
    events.push_back(PresenceEvent{r.caller_id, r.tower_id, r.start_time});
    if (policy == PresenceAttribution::both_parties)
      events.push_back(PresenceEvent{r.callee_id, r.tower_id, r.start_time});
  }
  auto key = [](const PresenceEvent& e) {
    return std::tie(e.timestamp, e.user_id, e.tower_id);
  };
  std::sort(events.begin(), events.end(),
            [&](const auto& a, const auto& b) { return key(a) < key(b); });
  events.erase(std::unique(events.begin(), events.end()), events.end());
  return events;
}

namespace detail {

// Engine-internal event with interned ids. Index order must equal the
// canonical (bytewise) order of the original identifiers.
struct CompactEvent {
  std::uint32_t tower = 0;
  std::uint32_t user = 0;
  std::int64_t time = 0;
};

struct CompactEpisode {
  std::uint32_t user_a = 0;
  std::uint32_t user_b = 0;
  std::uint32_t tower = 0;
  std::int64_t first_time = 0;
  std::int64_t last_time = 0;
  std::int64_t event_count = 0;

  friend bool operator<(const CompactEpisode& a, const CompactEpisode& b) {
    return std::tie(a.user_a, a.user_b, a.first_time, a.tower, a.last_time,
                    a.event_count) <
           std::tie(b.user_a, b.user_b, b.first_time, b.tower, b.last_time,
                    b.event_count);
  }
};

// Sliding-window scan of one tower's events (pre-sorted by (time, user)).
// Appends every finished episode to `out`.
inline void scan_tower(std::span<const CompactEvent> events, std::int64_t window,
                       std::vector<CompactEpisode>& out) {
  struct Open {
    std::int64_t first;
    std::int64_t last;
    std::int64_t last_stamp;  // latest co-occurrence stamp
    std::int64_t count;
  };
  std::unordered_map<std::uint64_t, Open> open;
  std::deque<std::pair<std::int64_t, std::uint32_t>> recent;  // (time, user)

  const std::uint32_t tower = events.empty() ? 0 : events.front().tower;
  for (const CompactEvent& e : events) {
    while (!recent.empty() && recent.front().first < e.time - window)
      recent.pop_front();
    for (const auto& [t, u] : recent) {
      if (u == e.user) continue;
      std::uint64_t key = u < e.user
                              ? (std::uint64_t(u) << 32) | e.user
                              : (std::uint64_t(e.user) << 32) | u;
      auto [it, inserted] = open.try_emplace(key, Open{t, e.time, e.time, 1});
      if (inserted) continue;
      Open& o = it->second;
      if (e.time - o.last_stamp <= window) {
        o.first = std::min(o.first, t);
        o.last = e.time;
        o.last_stamp = e.time;
        ++o.count;
      } else {
        out.push_back(CompactEpisode{std::uint32_t(key >> 32),
                                     std::uint32_t(key & 0xffffffffu), tower,
                                     o.first, o.last, o.count});
        o = Open{t, e.time, e.time, 1};
      }
    }
    recent.emplace_back(e.time, e.user);
  }
  for (const auto& [key, o] : open)
    out.push_back(CompactEpisode{std::uint32_t(key >> 32),
                                 std::uint32_t(key & 0xffffffffu), tower,
                                 o.first, o.last, o.count});
}

// Sort-plus-sliding-window join over interned events. Output is fully sorted;
// it does not depend on the worker count or on input order.
inline std::vector<CompactEpisode> join_encounters(std::vector<CompactEvent> events,
                                                   std::int64_t window,
                                                   int workers) {
  if (window <= 0) fail("detect_encounters: window_seconds must be positive");
  std::sort(events.begin(), events.end(), [](const auto& a, const auto& b) {
    return std::tie(a.tower, a.time, a.user) < std::tie(b.tower, b.time, b.user);
  });

  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  for (std::size_t i = 0; i < events.size();) {
    std::size_t j = i;
    while (j < events.size() && events[j].tower == events[i].tower) ++j;
    ranges.emplace_back(i, j);
    i = j;
  }

  int n_threads = std::clamp(workers, 1, 64);
  n_threads = static_cast<int>(
      std::min<std::size_t>(n_threads, std::max<std::size_t>(ranges.size(), 1)));

  std::vector<std::vector<CompactEpisode>> parts(n_threads);
  auto run = [&](int tid) {
    for (std::size_t r = tid; r < ranges.size(); r += n_threads) {
      auto [lo, hi] = ranges[r];
      scan_tower(std::span(events).subspan(lo, hi - lo), window, parts[tid]);
    }
  };
  if (n_threads == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(run, t);
    for (auto& th : pool) th.join();
  }

  std::vector<CompactEpisode> episodes;
  std::size_t total = 0;
  for (const auto& p : parts) total += p.size();
  episodes.reserve(total);
  for (auto& p : parts)
    episodes.insert(episodes.end(), p.begin(), p.end());
  std::sort(episodes.begin(), episodes.end());
  return episodes;
}

// Interning table whose index order equals canonical string order.
struct RankedNames {
  std::vector<std::string> names;  // sorted

  std::uint32_t rank_of(std::string_view s) const {
    auto it = std::lower_bound(names.begin(), names.end(), s);
    return static_cast<std::uint32_t>(it - names.begin());
  }
};

}  // namespace detail

/// The windowed per-tower co-location join. Treats `events` as a multiset;
/// output equals brute_force_encounters on any input, sorted canonically.
/// `workers` never changes the result.
inline std::vector<EncounterEpisode> detect_encounters(
    std::span<const PresenceEvent> events, std::int64_t window_seconds,
    int workers = 1) {
  detail::RankedNames users, towers;
  users.names.reserve(events.size());
  towers.names.reserve(64);
  for (const auto& e : events) {
    users.names.push_back(e.user_id);
    towers.names.push_back(e.tower_id);
  }
  auto dedup = [](std::vector<std::string>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  dedup(users.names);
  dedup(towers.names);

  std::vector<detail::CompactEvent> compact;
  compact.reserve(events.size());
  for (const auto& e : events)
    compact.push_back(detail::CompactEvent{towers.rank_of(e.tower_id),
                                           users.rank_of(e.user_id), e.timestamp});

  std::vector<EncounterEpisode> out;
  auto joined = detail::join_encounters(std::move(compact), window_seconds, workers);
  out.reserve(joined.size());
  for (const auto& ep : joined)
    out.push_back(EncounterEpisode{
        PairKey{users.names[ep.user_a], users.names[ep.user_b]},
        towers.names[ep.tower], ep.first_time, ep.last_time, ep.event_count});
  return out;
}

/// Quadratic reference implementation: examines every event pair. Episode
/// semantics are identical to detect_encounters by construction.
inline std::vector<EncounterEpisode> brute_force_encounters(
    std::span<const PresenceEvent> events, std::int64_t window_seconds) {
  constexpr std::size_t kGuard = 100000;
  if (events.size() > kGuard)
    fail("brute_force_encounters: input exceeds " + std::to_string(kGuard) +
         " events");
  if (window_seconds <= 0)
    fail("brute_force_encounters: window_seconds must be positive");

  // (stamp, earlier time) per raw co-occurrence, keyed by (pair, tower)
  std::map<std::tuple<std::string, std::string, std::string>,
           std::vector<std::pair<std::int64_t, std::int64_t>>>
      cooccurrences;
  for (std::size_t i = 0; i < events.size(); ++i) {
    for (std::size_t j = i + 1; j < events.size(); ++j) {
      const auto& a = events[i];
      const auto& b = events[j];
      if (a.tower_id != b.tower_id) continue;
      if (a.user_id == b.user_id) continue;
      std::int64_t dt = a.timestamp - b.timestamp;
      if (dt < 0) dt = -dt;
      if (dt > window_seconds) continue;
      PairKey key = PairKey::canonical(a.user_id, b.user_id);
      cooccurrences[{key.user_a, key.user_b, a.tower_id}].emplace_back(
          std::max(a.timestamp, b.timestamp), std::min(a.timestamp, b.timestamp));
    }
  }

  std::vector<EncounterEpisode> episodes;
  for (auto& [key, list] : cooccurrences) {
    std::sort(list.begin(), list.end());
    std::size_t start = 0;
    for (std::size_t k = 1; k <= list.size(); ++k) {
      if (k == list.size() || list[k].first - list[k - 1].first > window_seconds) {
        std::int64_t first = list[start].second;
        std::int64_t last = list[start].first;
        for (std::size_t m = start; m < k; ++m) {
          first = std::min(first, list[m].second);
          last = std::max(last, list[m].first);
        }
        episodes.push_back(EncounterEpisode{
            PairKey{std::get<0>(key), std::get<1>(key)}, std::get<2>(key),
            first, last, static_cast<std::int64_t>(k - start)});
        start = k;
      }
    }
  }
  std::sort(episodes.begin(), episodes.end(), EncounterEpisode::canonical_less);
  return episodes;
}

/// Episodes per pair (merged episodes, not raw co-occurrences).
inline std::map<PairKey, std::int64_t> pair_encounter_counts(
    std::span<const EncounterEpisode> episodes) {
  std::map<PairKey, std::int64_t> counts;
  for (const auto& ep : episodes) ++counts[ep.pair];
  return counts;
}

// Episode file: user_a,user_b,tower_id,first_epoch_s,last_epoch_s,event_count
inline void write_episodes_csv(std::ostream& os,
                               std::span<const EncounterEpisode> episodes) {
  std::string line;
  for (const auto& ep : episodes) {
    line.clear();
    line += ep.pair.user_a;
    line += ',';
    line += ep.pair.user_b;
    line += ',';
    line += ep.tower_id;
    line += ',';
    csv::append(line, ep.first_time);
    line += ',';
    csv::append(line, ep.last_time);
    line += ',';
    csv::append(line, ep.event_count);
    line += '\n';
    os << line;
  }
}

inline std::vector<EncounterEpisode> read_episodes_csv(std::string_view text) {
  std::vector<EncounterEpisode> episodes;
  std::vector<std::string_view> fields;
  csv::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (line.empty()) return;
    csv::split(line, ',', fields);
    if (fields.size() != 6)
      fail("episode file: line " + std::to_string(line_no) +
           ": expected 6 fields, got " + std::to_string(fields.size()));
    EncounterEpisode ep;
    if (line_no == 1) {
      std::int64_t v;
      if (!csv::parse_i64(fields[3], v)) return;  // header
    }
    ep.pair.user_a = std::string(fields[0]);
    ep.pair.user_b = std::string(fields[1]);
    ep.tower_id = std::string(fields[2]);
    if (!csv::parse_i64(fields[3], ep.first_time) ||
        !csv::parse_i64(fields[4], ep.last_time) ||
        !csv::parse_i64(fields[5], ep.event_count))
      fail("episode file: line " + std::to_string(line_no) + ": invalid numeric field");
    if (ep.pair.user_a >= ep.pair.user_b)
      fail("episode file: line " + std::to_string(line_no) + ": pair not canonical");
    if (ep.last_time < ep.first_time || ep.event_count < 1)
      fail("episode file: line " + std::to_string(line_no) + ": invalid episode");
    episodes.push_back(std::move(ep));
  });
  return episodes;
}

}  // namespace atlas

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "atlas/core.hpp"
#include "atlas/csv.hpp"
#include "atlas/encounter.hpp"

namespace atlas {

// Fixed-offset local time. Day-of-week index: 0 = Monday .. 6 = Sunday.
struct LocalStamp {
  int day_of_week = 0;
  int hour = 0;
};

inline LocalStamp to_local(std::int64_t epoch_s, int tz_offset_hours) {
  std::int64_t local = epoch_s + std::int64_t(tz_offset_hours) * 3600;
  std::int64_t days = floor_div(local, 86400);
  LocalStamp out;
  out.day_of_week = static_cast<int>(floor_mod(days + 3, 7));  // 1970-01-01 was a Thursday
  out.hour = static_cast<int>(floor_mod(local, 86400) / 3600);
  return out;
}

inline bool is_weekend(const LocalStamp& s) { return s.day_of_week >= 5; }

namespace detail {

// Episodes grouped per pair in canonical order; consecutive elements within a
// group are the pair's consecutive episodes.
inline std::vector<EncounterEpisode> sorted_by_pair(
    std::span<const EncounterEpisode> episodes) {
  std::vector<EncounterEpisode> sorted(episodes.begin(), episodes.end());
  std::sort(sorted.begin(), sorted.end(), EncounterEpisode::canonical_less);
  return sorted;
}

// Visits fn(previous, current) for every consecutive episode transition of
// every pair, ordered by first_time within the pair.
template <typename Fn>
void for_each_transition(std::span<const EncounterEpisode> episodes, Fn&& fn) {
  auto sorted = sorted_by_pair(episodes);
  for (std::size_t i = 1; i < sorted.size(); ++i)
    if (sorted[i].pair == sorted[i - 1].pair) fn(sorted[i - 1], sorted[i]);
}

}  // namespace detail

// 7x24 episode counts by local (day_of_week, hour).
struct HourlyProfile {
  std::array<std::array<std::int64_t, 24>, 7> counts{};
  int tz_offset_hours = 0;

  std::int64_t total() const {
    std::int64_t sum = 0;
    for (const auto& day : counts)
      for (std::int64_t c : day) sum += c;
    return sum;
  }
};

/// Buckets each episode by its first_time in the given fixed offset.
inline HourlyProfile hourly_profile(std::span<const EncounterEpisode> episodes,
                                    int tz_offset_hours) {
  HourlyProfile profile;
  profile.tz_offset_hours = tz_offset_hours;
  for (const auto& ep : episodes) {
    LocalStamp s = to_local(ep.first_time, tz_offset_hours);
    ++profile.counts[s.day_of_week][s.hour];
  }
  return profile;
}

struct InterEventBin {
  std::int64_t index = 0;  // bin covers [index*bin_seconds, (index+1)*bin_seconds)
  std::int64_t count = 0;
  double probability = 0.0;
};

// Probability mass function of gaps between a pair's consecutive episodes.
struct InterEventDistribution {
  std::int64_t bin_seconds = 0;
  std::vector<InterEventBin> bins;  // sparse, ascending by index
  std::int64_t sample_count = 0;

  const InterEventBin* find_bin(std::int64_t index) const {
    auto it = std::lower_bound(bins.begin(), bins.end(), index,
                               [](const InterEventBin& b, std::int64_t i) {
                                 return b.index < i;
                               });
    return (it != bins.end() && it->index == index) ? &*it : nullptr;
  }

  std::int64_t modal_bin() const {
    if (bins.empty()) fail("inter-event distribution: empty");
    const InterEventBin* best = &bins.front();
    for (const auto& b : bins)
      if (b.count > best->count) best = &b;
    return best->index;
  }
};

/// Gaps are first_time differences between consecutive episodes of the same
/// pair, across all towers. Pairs with a single episode contribute nothing.
inline InterEventDistribution inter_event_distribution(
    std::span<const EncounterEpisode> episodes, std::int64_t bin_seconds) {
  if (bin_seconds <= 0) fail("inter_event_distribution: bin_seconds must be positive");
  InterEventDistribution dist;
  dist.bin_seconds = bin_seconds;
  std::map<std::int64_t, std::int64_t> histogram;
  detail::for_each_transition(episodes, [&](const EncounterEpisode& prev,
                                            const EncounterEpisode& cur) {
    std::int64_t gap = cur.first_time - prev.first_time;
    ++histogram[floor_div(gap, bin_seconds)];
    ++dist.sample_count;
  });
  dist.bins.reserve(histogram.size());
  for (auto [index, count] : histogram)
    dist.bins.push_back(InterEventBin{
        index, count, static_cast<double>(count) / static_cast<double>(dist.sample_count)});
  return dist;
}

// Consecutive-encounter timing structure: a 2x2 weekday/weekend class table
// and a 24x24 (hour of episode i, hour of episode i+1) table. Index 0 =
// weekday, 1 = weekend.
struct ConsecutiveTimeMatrix {
  std::array<std::array<std::int64_t, 2>, 2> day_class{};
  std::array<std::array<std::int64_t, 24>, 24> hour{};
  std::int64_t transitions = 0;
  int tz_offset_hours = 0;

  double off_diagonal_fraction() const {
    std::int64_t total = day_class[0][0] + day_class[0][1] + day_class[1][0] +
                         day_class[1][1];
    if (total == 0) return 0.0;
    return static_cast<double>(day_class[0][1] + day_class[1][0]) /
           static_cast<double>(total);
  }
};

inline ConsecutiveTimeMatrix consecutive_time_matrix(
    std::span<const EncounterEpisode> episodes, int tz_offset_hours) {
  ConsecutiveTimeMatrix m;
  m.tz_offset_hours = tz_offset_hours;
  detail::for_each_transition(episodes, [&](const EncounterEpisode& prev,
                                            const EncounterEpisode& cur) {
    LocalStamp a = to_local(prev.first_time, tz_offset_hours);
    LocalStamp b = to_local(cur.first_time, tz_offset_hours);
    ++m.day_class[is_weekend(a) ? 1 : 0][is_weekend(b) ? 1 : 0];
    ++m.hour[a.hour][b.hour];
    ++m.transitions;
  });
  return m;
}

// hourly_profile.csv: day,hour,count (day 0 = Monday)
inline void write_hourly_profile_csv(std::ostream& os, const HourlyProfile& p) {
  os << "day,hour,count\n";
  for (int d = 0; d < 7; ++d)
    for (int h = 0; h < 24; ++h)
      os << d << ',' << h << ',' << p.counts[d][h] << '\n';
}

// inter_event.csv: bin_start_s,probability,count ("probability" is bin mass)
inline void write_inter_event_csv(std::ostream& os, const InterEventDistribution& d) {
  os << "bin_start_s,probability,count\n";
  for (const auto& b : d.bins)
    os << b.index * d.bin_seconds << ',' << csv::format(b.probability) << ','
       << b.count << '\n';
}

// consec_matrix.csv: row,col,count over {weekday, weekend}
inline void write_consec_matrix_csv(std::ostream& os, const ConsecutiveTimeMatrix& m) {
  static constexpr const char* kClass[2] = {"weekday", "weekend"};
  os << "row,col,count\n";
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c)
      os << kClass[r] << ',' << kClass[c] << ',' << m.day_class[r][c] << '\n';
}

// consec_hour_matrix.csv: row,col,count over local hours 0-23
inline void write_consec_hour_matrix_csv(std::ostream& os,
                                         const ConsecutiveTimeMatrix& m) {
  os << "row,col,count\n";
  for (int r = 0; r < 24; ++r)
    for (int c = 0; c < 24; ++c)
      os << r << ',' << c << ',' << m.hour[r][c] << '\n';
}

}  // namespace atlas

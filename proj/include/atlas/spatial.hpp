#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "atlas/cdr.hpp"
#include "atlas/core.hpp"
#include "atlas/csv.hpp"
#include "atlas/encounter.hpp"
#include "atlas/temporal.hpp"

namespace atlas {

/// Great-circle distance on a 6371.0 km sphere.
inline double haversine_km(const Tower& a, const Tower& b) {
  constexpr double kEarthRadiusKm = 6371.0;
  constexpr double kDegToRad = std::numbers::pi / 180.0;
  double lat_a = a.latitude * kDegToRad;
  double lat_b = b.latitude * kDegToRad;
  double dlat = (b.latitude - a.latitude) * kDegToRad;
  double dlon = (b.longitude - a.longitude) * kDegToRad;
  double s_lat = std::sin(dlat / 2.0);
  double s_lon = std::sin(dlon / 2.0);
  double h = s_lat * s_lat + std::cos(lat_a) * std::cos(lat_b) * s_lon * s_lon;
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

// Per-tower episode totals and the hottest pair at each tower.
struct TowerStat {
  std::string tower_id;
  std::int64_t total_encounters = 0;
  std::int64_t max_pair_count = 0;
};

inline std::vector<TowerStat> tower_summary(std::span<const EncounterEpisode> episodes) {
  std::map<std::string, std::map<PairKey, std::int64_t>> per_tower;
  for (const auto& ep : episodes) ++per_tower[ep.tower_id][ep.pair];
  std::vector<TowerStat> stats;
  stats.reserve(per_tower.size());
  for (const auto& [tower, pairs] : per_tower) {
    TowerStat s;
    s.tower_id = tower;
    for (const auto& [pair, count] : pairs) {
      s.total_encounters += count;
      s.max_pair_count = std::max(s.max_pair_count, count);
    }
    stats.push_back(std::move(s));
  }
  return stats;
}

// Ordered origin->destination transition flows plus per-tower episode
// popularity. Flow values are reals so that model-generated matrices can carry
// exact (unrounded) magnitudes; episode-derived flows are integral.
struct FlowMatrix {
  std::map<std::pair<std::string, std::string>, double> flows;
  std::map<std::string, double> popularity;

  double total_flow() const {
    double sum = 0.0;
    for (const auto& [key, v] : flows) sum += v;
    return sum;
  }

  double flow(std::string_view from, std::string_view to) const {
    auto it = flows.find({std::string(from), std::string(to)});
    return it == flows.end() ? 0.0 : it->second;
  }
};

/// Each consecutive episode transition of a pair increments the ordered cell
/// (tower of episode k, tower of episode k+1); i = j allowed. Popularity
/// counts every episode at the tower.
inline FlowMatrix consecutive_flows(std::span<const EncounterEpisode> episodes) {
  FlowMatrix m;
  for (const auto& ep : episodes) m.popularity[ep.tower_id] += 1.0;
  detail::for_each_transition(episodes, [&](const EncounterEpisode& prev,
                                            const EncounterEpisode& cur) {
    m.flows[{prev.tower_id, cur.tower_id}] += 1.0;
  });
  return m;
}

// Log-log least-squares fit of flows against popularity and distance:
//   log T_ij = c_log + alpha*log N_i + beta*log N_j - gamma*log D_ij
struct GravityFit {
  double c_log = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double r_squared = 0.0;
  std::int64_t points_used = 0;
  double distance_floor_km = 0.0;

  double c() const { return std::exp(c_log); }
};

/// Ordinary least squares over cells with T_ij > 0, N_i > 0, N_j > 0, i != j
/// and D_ij >= distance_floor_km. Throws on fewer than 4 usable cells or a
/// rank-deficient design (e.g. all usable distances equal).
inline GravityFit fit_gravity(const FlowMatrix& flows, const TowerTable& towers,
                              double distance_floor_km) {
  std::vector<std::array<double, 3>> xs;  // log Ni, log Nj, log D
  std::vector<double> ys;
  for (const auto& [cell, t_ij] : flows.flows) {
    const auto& [from, to] = cell;
    if (t_ij <= 0.0) continue;
    if (from == to) continue;
    auto ni = flows.popularity.find(from);
    auto nj = flows.popularity.find(to);
    if (ni == flows.popularity.end() || ni->second <= 0.0) continue;
    if (nj == flows.popularity.end() || nj->second <= 0.0) continue;
    double d = haversine_km(towers.at(from), towers.at(to));
    if (d < distance_floor_km) continue;
    xs.push_back({std::log(ni->second), std::log(nj->second), std::log(d)});
    ys.push_back(std::log(t_ij));
  }

  const auto n = static_cast<Eigen::Index>(ys.size());
  if (n < 4)
    fail("fit_gravity: " + std::to_string(ys.size()) +
         " usable cells; at least 4 required");

  Eigen::MatrixXd design(n, 4);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 0) = 1.0;
    design(i, 1) = xs[i][0];
    design(i, 2) = xs[i][1];
    design(i, 3) = xs[i][2];
    y(i) = ys[i];
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < 4)
    fail("fit_gravity: singular design (collinear regressors); cannot identify exponents");
  Eigen::VectorXd coef = qr.solve(y);

  GravityFit fit;
  fit.c_log = coef(0);
  fit.alpha = coef(1);
  fit.beta = coef(2);
  fit.gamma = -coef(3);
  fit.points_used = static_cast<std::int64_t>(n);
  fit.distance_floor_km = distance_floor_km;

  double rss = (y - design * coef).squaredNorm();
  double mean = y.mean();
  double tss = (y.array() - mean).square().sum();
  if (tss > 0.0)
    fit.r_squared = 1.0 - rss / tss;
  else
    fit.r_squared = rss < 1e-18 ? 1.0 : 0.0;
  return fit;
}

// Row-stochastic transition mass between POI categories of consecutive
// encounter locations.
struct PoiTransitionMatrix {
  std::vector<std::string> categories;          // sorted
  std::vector<std::vector<double>> probabilities;  // [from][to]
  std::vector<std::vector<double>> mass;           // aggregated flow before normalization
  std::int64_t skipped_flow_cells = 0;  // cells touching a tower without a category
  bool row_normalized = true;

  int category_index(std::string_view cat) const {
    auto it = std::lower_bound(categories.begin(), categories.end(), cat);
    if (it == categories.end() || *it != cat) return -1;
    return static_cast<int>(it - categories.begin());
  }

  double probability(std::string_view from, std::string_view to) const {
    int f = category_index(from);
    int t = category_index(to);
    if (f < 0 || t < 0) return 0.0;
    return probabilities[f][t];
  }
};

/// Aggregates ordered flows into POI category pairs. Cells whose origin or
/// destination tower lacks a category are skipped and counted. Row
/// normalization divides by the row sum; otherwise by the global sum.
inline PoiTransitionMatrix poi_transition_matrix(const FlowMatrix& flows,
                                                 const TowerTable& towers,
                                                 bool row_normalize = true) {
  std::map<std::pair<std::string, std::string>, double> mass;
  std::int64_t skipped = 0;
  for (const auto& [cell, value] : flows.flows) {
    if (value <= 0.0) continue;
    const Tower& from = towers.at(cell.first);
    const Tower& to = towers.at(cell.second);
    if (!from.has_poi() || !to.has_poi()) {
      ++skipped;
      continue;
    }
    mass[{from.poi_category, to.poi_category}] += value;
  }

  PoiTransitionMatrix out;
  out.skipped_flow_cells = skipped;
  out.row_normalized = row_normalize;
  for (const auto& [key, value] : mass) {
    out.categories.push_back(key.first);
    out.categories.push_back(key.second);
  }
  std::sort(out.categories.begin(), out.categories.end());
  out.categories.erase(std::unique(out.categories.begin(), out.categories.end()),
                       out.categories.end());
  const std::size_t k = out.categories.size();
  out.mass.assign(k, std::vector<double>(k, 0.0));
  out.probabilities.assign(k, std::vector<double>(k, 0.0));
  double total = 0.0;
  for (const auto& [key, value] : mass) {
    int f = out.category_index(key.first);
    int t = out.category_index(key.second);
    out.mass[f][t] = value;
    total += value;
  }
  for (std::size_t f = 0; f < k; ++f) {
    double denom;
    if (row_normalize) {
      denom = 0.0;
      for (std::size_t t = 0; t < k; ++t) denom += out.mass[f][t];
    } else {
      denom = total;
    }
    if (denom <= 0.0) continue;
    for (std::size_t t = 0; t < k; ++t)
      out.probabilities[f][t] = out.mass[f][t] / denom;
  }
  return out;
}

enum class GapClass { within_12h, about_24h, about_48h, longer };

inline std::string_view to_string(GapClass g) {
  switch (g) {
    case GapClass::within_12h: return "within_12h";
    case GapClass::about_24h: return "about_24h";
    case GapClass::about_48h: return "about_48h";
    case GapClass::longer: return "longer";
  }
  fail("unreachable gap class");
}

inline GapClass classify_gap(std::int64_t gap_seconds) {
  if (gap_seconds <= 12 * 3600) return GapClass::within_12h;
  if (gap_seconds <= 36 * 3600) return GapClass::about_24h;
  if (gap_seconds <= 60 * 3600) return GapClass::about_48h;
  return GapClass::longer;
}

// Tower-level edge aggregating consecutive-encounter transitions of pairs.
struct ReencounterEdge {
  std::string tower_i;  // tower_i <= tower_j
  std::string tower_j;
  std::int64_t pair_count = 0;
  std::int64_t median_gap_seconds = 0;
  GapClass gap_class = GapClass::within_12h;
};

/// Collects (unordered tower pair, gap) per consecutive transition; keeps
/// tower pairs with at least min_edge_pairs transitions. The median is the
/// lower median of the gap multiset.
inline std::vector<ReencounterEdge> reencounter_network(
    std::span<const EncounterEpisode> episodes, std::int64_t min_edge_pairs) {
  if (min_edge_pairs < 0) fail("reencounter_network: min_edge_pairs must be >= 0");
  std::map<std::pair<std::string, std::string>, std::vector<std::int64_t>> gaps;
  detail::for_each_transition(episodes, [&](const EncounterEpisode& prev,
                                            const EncounterEpisode& cur) {
    auto key = std::minmax(prev.tower_id, cur.tower_id);
    gaps[{key.first, key.second}].push_back(cur.first_time - prev.first_time);
  });

  std::vector<ReencounterEdge> edges;
  for (auto& [key, list] : gaps) {
    if (static_cast<std::int64_t>(list.size()) < min_edge_pairs) continue;
    std::sort(list.begin(), list.end());
    ReencounterEdge e;
    e.tower_i = key.first;
    e.tower_j = key.second;
    e.pair_count = static_cast<std::int64_t>(list.size());
    e.median_gap_seconds = list[(list.size() - 1) / 2];
    e.gap_class = classify_gap(e.median_gap_seconds);
    edges.push_back(std::move(e));
  }
  return edges;
}

// flows.csv: origin,destination,count,distance_km
inline void write_flows_csv(std::ostream& os, const FlowMatrix& flows,
                            const TowerTable& towers) {
  os << "origin,destination,count,distance_km\n";
  for (const auto& [cell, value] : flows.flows) {
    double d = haversine_km(towers.at(cell.first), towers.at(cell.second));
    os << cell.first << ',' << cell.second << ',' << csv::format(value) << ','
       << csv::format(d) << '\n';
  }
}

inline void write_gravity_fit_json(std::ostream& os, const GravityFit& fit) {
  os << "{\n"
     << "  \"alpha\": " << csv::format(fit.alpha) << ",\n"
     << "  \"beta\": " << csv::format(fit.beta) << ",\n"
     << "  \"c_log\": " << csv::format(fit.c_log) << ",\n"
     << "  \"distance_floor_km\": " << csv::format(fit.distance_floor_km) << ",\n"
     << "  \"gamma\": " << csv::format(fit.gamma) << ",\n"
     << "  \"points_used\": " << fit.points_used << ",\n"
     << "  \"r_squared\": " << csv::format(fit.r_squared) << "\n"
     << "}\n";
}

// poi_matrix.csv: from_category,to_category,probability,mass
inline void write_poi_matrix_csv(std::ostream& os, const PoiTransitionMatrix& m) {
  os << "from_category,to_category,probability,mass\n";
  for (std::size_t f = 0; f < m.categories.size(); ++f)
    for (std::size_t t = 0; t < m.categories.size(); ++t)
      os << m.categories[f] << ',' << m.categories[t] << ','
         << csv::format(m.probabilities[f][t]) << ',' << csv::format(m.mass[f][t])
         << '\n';
}

// reencounter_edges.csv: tower_i,tower_j,pair_count,median_gap_s,gap_class
inline void write_reencounter_csv(std::ostream& os,
                                  std::span<const ReencounterEdge> edges) {
  os << "tower_i,tower_j,pair_count,median_gap_s,gap_class\n";
  for (const auto& e : edges)
    os << e.tower_i << ',' << e.tower_j << ',' << e.pair_count << ','
       << e.median_gap_seconds << ',' << to_string(e.gap_class) << '\n';
}

// tower_summary.csv: tower_id,total_encounters,max_pair_count
inline void write_tower_summary_csv(std::ostream& os,
                                    std::span<const TowerStat> stats) {
  os << "tower_id,total_encounters,max_pair_count\n";
  for (const auto& s : stats)
    os << s.tower_id << ',' << s.total_encounters << ',' << s.max_pair_count << '\n';
}

}  // namespace atlas

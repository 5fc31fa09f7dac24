// Acceptance suite: one line per criterion, nonzero exit on any failure.
//
// Criteria 1-9 run in-process against the library; criterion 10 drives the
// CLI binary end-to-end on a 10-million-record dataset and checks byte
// determinism across reruns and worker counts.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "atlas/atlas.hpp"

namespace fsys = std::filesystem;
using namespace atlas;
using Clock = std::chrono::steady_clock;

namespace {

struct Criterion {
  std::string name;
  std::function<std::string()> run;  // empty string = pass, else failure reason
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string slurp(const fsys::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail("cannot open " + p.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
      std::size_t j = i;
      while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
      double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  auto rx = ranks(xs);
  auto ry = ranks(ys);
  double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / rx.size();
  double my = std::accumulate(ry.begin(), ry.end(), 0.0) / ry.size();
  double cov = 0, vx = 0, vy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    cov += (rx[i] - mx) * (ry[i] - my);
    vx += (rx[i] - mx) * (rx[i] - mx);
    vy += (ry[i] - my) * (ry[i] - my);
  }
  if (vx == 0 || vy == 0) return 0.0;
  return cov / std::sqrt(vx * vy);
}

std::string check_near(const char* what, double got, double want, double tol) {
  if (std::abs(got - want) <= tol) return {};
  std::ostringstream os;
  os << what << " = " << got << ", wanted " << want << " +/- " << tol;
  return os.str();
}

// --- C1: encounter oracle equivalence -------------------------------------
std::string c1_oracle_equivalence() {
  auto start = Clock::now();
  SplitMix64 rng(20160704);
  const std::int64_t windows[] = {600, 3600, 7200};
  for (int trial = 0; trial < 200; ++trial) {
    int towers = 5 + static_cast<int>(rng.next_below(16));   // 5..20
    int users = 5 + static_cast<int>(rng.next_below(46));    // 5..50
    int n = static_cast<int>(rng.next_below(501));           // 0..500
    std::vector<PresenceEvent> events;
    events.reserve(n);
    for (int i = 0; i < n; ++i)
      events.push_back(PresenceEvent{
          "u" + std::to_string(rng.next_below(users)),
          "T" + std::to_string(rng.next_below(towers)),
          rng.next_in(0, 48 * 3600)});
    std::int64_t window = windows[trial % 3];
    auto expected = brute_force_encounters(events, window);
    auto actual = detect_encounters(events, window, 1 + trial % 8);
    if (actual != expected)
      return "mismatch on trial " + std::to_string(trial) + " (window " +
             std::to_string(window) + ", " + std::to_string(n) + " events)";
  }
  double elapsed = seconds_since(start);
  if (elapsed >= 30.0)
    return "exceeded runtime budget: " + std::to_string(elapsed) + "s >= 30s";
  return {};
}

// --- C2: exact gravity recovery --------------------------------------------
std::string c2_gravity_exact() {
  auto start = Clock::now();
  TowerTable towers = make_tower_grid(4, 5, 42.44, 1.40, 0.018, 0.024, "G", false);
  auto popularity = log_spread_popularity(towers, 50, 2000);
  auto flows = generate_gravity_flows(towers, popularity,
                                      GravityParams{1.0, 0.5, 0.5, 1.0}, 0.0, 1);
  GravityFit fit = fit_gravity(flows, towers, 0.1);
  if (auto e = check_near("alpha", fit.alpha, 0.5, 1e-6); !e.empty()) return e;
  if (auto e = check_near("beta", fit.beta, 0.5, 1e-6); !e.empty()) return e;
  if (auto e = check_near("gamma", fit.gamma, 1.0, 1e-6); !e.empty()) return e;
  if (fit.r_squared <= 0.999999)
    return "r_squared " + std::to_string(fit.r_squared) + " <= 0.999999";
  double elapsed = seconds_since(start);
  if (elapsed >= 1.0)
    return "exceeded runtime budget: " + std::to_string(elapsed) + "s >= 1s";
  return {};
}

// --- C3: noisy gravity recovery ---------------------------------------------
std::string c3_gravity_noisy() {
  auto start = Clock::now();
  TowerTable towers = make_tower_grid(4, 5, 42.44, 1.40, 0.018, 0.024, "G", false);
  auto popularity = log_spread_popularity(towers, 50, 5000);
  const GravityParams planted{2.0, 0.38, 0.407, 0.823};
  int within = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    auto flows = generate_gravity_flows(towers, popularity, planted, 0.1, seed);
    GravityFit fit = fit_gravity(flows, towers, 0.1);
    if (std::abs(fit.alpha - planted.alpha) <= 0.05 &&
        std::abs(fit.beta - planted.beta) <= 0.05 &&
        std::abs(fit.gamma - planted.gamma) <= 0.05)
      ++within;
  }
  if (within < 95)
    return "only " + std::to_string(within) + "/100 trials within +/-0.05";
  double elapsed = seconds_since(start);
  if (elapsed >= 30.0)
    return "exceeded runtime budget: " + std::to_string(elapsed) + "s >= 30s";
  return {};
}

// --- C4: 24-hour periodicity signature --------------------------------------
std::string c4_daily_periodicity() {
  auto start = Clock::now();
  auto scenario = make_commuters_scenario();
  auto events = extract_presence(generate_cdr(scenario),
                                 PresenceAttribution::caller_only);
  auto episodes = detect_encounters(events, 3600, 4);
  auto dist = inter_event_distribution(episodes, 3600);
  if (dist.sample_count == 0) return "no inter-event gaps produced";
  if (dist.modal_bin() != 24)
    return "modal bin " + std::to_string(dist.modal_bin()) + ", wanted 24";
  const InterEventBin* day2 = dist.find_bin(48);
  const InterEventBin* day3 = dist.find_bin(72);
  if (!day2 || !day3) return "missing 48h or 72h bin";
  for (const auto& b : dist.bins) {
    std::int64_t mod = b.index % 24;
    std::int64_t near = std::min(mod, 24 - mod);
    if (near > 6 && (b.count >= day2->count || b.count >= day3->count))
      return "bin " + std::to_string(b.index) + "h (count " +
             std::to_string(b.count) + ") not below the 48h/72h peaks";
  }
  double elapsed = seconds_since(start);
  if (elapsed >= 10.0)
    return "exceeded runtime budget: " + std::to_string(elapsed) + "s >= 10s";
  return {};
}

// --- C5: weekday/weekend separation ------------------------------------------
std::string c5_weekday_weekend() {
  auto start = Clock::now();
  auto scenario = make_weekend_crowd_scenario();
  auto events = extract_presence(generate_cdr(scenario),
                                 PresenceAttribution::caller_only);
  auto episodes = detect_encounters(events, 3600, 4);
  auto matrix = consecutive_time_matrix(episodes, scenario.tz_offset_hours);
  if (matrix.transitions == 0) return "no transitions produced";
  double off = matrix.off_diagonal_fraction();
  if (off >= 0.05)
    return "off-diagonal fraction " + std::to_string(off) + " >= 0.05";
  double elapsed = seconds_since(start);
  if (elapsed >= 10.0)
    return "exceeded runtime budget: " + std::to_string(elapsed) + "s >= 10s";
  return {};
}

// --- C6: familiar-stranger exclusion -----------------------------------------
std::string c6_familiar_stranger_exclusion() {
  auto start = Clock::now();
  const int pair_count = 200;
  const double fraction = 0.2;
  auto scenario = make_overlap_scenario(45, pair_count, fraction);
  auto records = generate_cdr(scenario);
  auto events = extract_presence(records, PresenceAttribution::caller_only);
  auto episodes = detect_encounters(events, 3600, 4);
  auto counts = pair_encounter_counts(episodes);

  auto graph = build_comm_graph(records);
  auto filtered = filter_high_degree(graph, 100);
  auto fs = familiar_stranger_pairs(counts, filtered.graph, filtered.removed);

  const int with_edge = static_cast<int>(std::llround(pair_count * fraction));
  std::set<PairKey> expected;
  for (int p = with_edge; p < pair_count; ++p)
    expected.insert(PairKey::canonical(detail::seq_name("v", 3, p, "a"),
                                       detail::seq_name("v", 3, p, "b")));
  std::set<PairKey> got;
  for (const auto& p : fs) got.insert(p.pair);
  if (got != expected) {
    return "familiar-stranger set mismatch: got " + std::to_string(got.size()) +
           " pairs, expected exactly the " + std::to_string(expected.size()) +
           " pairs without comm edges";
  }
  for (const auto& p : fs)
    if (filtered.graph.has_edge(p.pair.user_a, p.pair.user_b))
      return "pair " + p.pair.user_a + "," + p.pair.user_b + " has a comm edge";
  double elapsed = seconds_since(start);
  if (elapsed >= 5.0)
    return "exceeded runtime budget: " + std::to_string(elapsed) + "s >= 5s";
  return {};
}

// --- C7: negative distance-encounter correlation ------------------------------
std::string c7_distance_correlation() {
  auto start = Clock::now();
  auto scenario = make_social_decay_scenario();
  auto records = generate_cdr(scenario);
  auto events = extract_presence(records, PresenceAttribution::caller_only);
  auto episodes = detect_encounters(events, 3600, 4);
  auto counts = pair_encounter_counts(episodes);
  auto graph = build_comm_graph(records);
  auto filtered = filter_high_degree(graph, 100);
  auto fs = familiar_stranger_pairs(counts, filtered.graph, filtered.removed);
  fill_social_distances(fs, filtered.graph);
  std::vector<double> encounter_counts, hop_distances;
  for (const auto& p : fs) {
    if (!p.social_distance->is_connected()) continue;
    encounter_counts.push_back(static_cast<double>(p.encounter_count));
    hop_distances.push_back(static_cast<double>(p.social_distance->hop_count()));
  }
  if (encounter_counts.size() < 50)
    return "too few connected familiar-stranger pairs: " +
           std::to_string(encounter_counts.size());
  double rho = spearman(encounter_counts, hop_distances);
  if (rho >= -0.3)
    return "spearman " + std::to_string(rho) + " >= -0.3";
  double elapsed = seconds_since(start);
  if (elapsed >= 30.0)
    return "exceeded runtime budget: " + std::to_string(elapsed) + "s >= 30s";
  return {};
}

// --- C8: degree filter correctness --------------------------------------------
std::string c8_degree_filter() {
  SplitMix64 rng(808);
  auto name = [](int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "u%04d", i);
    return std::string(buf);
  };
  std::set<std::pair<std::string, std::string>> edges;
  std::set<std::string> hubs;
  for (int h = 0; h < 5; ++h) {
    hubs.insert(name(h));
    int added = 0;
    while (added < 101 + static_cast<int>(rng.next_below(60))) {
      int peer = 5 + static_cast<int>(rng.next_below(995));
      auto e = std::minmax(name(h), name(peer));
      if (edges.emplace(e.first, e.second).second) ++added;
    }
  }
  for (int i = 0; i < 600; ++i) {
    int a = 5 + static_cast<int>(rng.next_below(995));
    int b = 5 + static_cast<int>(rng.next_below(995));
    if (a == b) continue;
    auto e = std::minmax(name(a), name(b));
    edges.emplace(e.first, e.second);
  }
  std::vector<CallRecord> records;
  std::int64_t t = 0;
  for (const auto& [a, b] : edges)
    records.push_back(CallRecord{a, b, "T1", t += 10, t + 60});
  auto graph = build_comm_graph(records);
  auto [filtered, removed] = filter_high_degree(graph, 100);
  if (std::set<std::string>(removed.begin(), removed.end()) != hubs)
    return "removed set is not exactly the 5 planted hubs (" +
           std::to_string(removed.size()) + " removed)";
  auto [refiltered, removed_again] = filter_high_degree(filtered, 100);
  if (!removed_again.empty())
    return "second filter application removed " +
           std::to_string(removed_again.size()) + " vertices";
  if (refiltered.vertex_count() != filtered.vertex_count() ||
      refiltered.edge_count() != filtered.edge_count())
    return "second filter application changed the graph";
  return {};
}

// --- C9: BFS oracle equivalence ------------------------------------------------
std::string c9_bfs_oracle() {
  SplitMix64 rng(909);
  for (int g = 0; g < 50; ++g) {
    int n = 10 + static_cast<int>(rng.next_below(191));  // 10..200 vertices
    double p = 0.5 / n + rng.next_double() * (4.0 / n);
    std::vector<CallRecord> records;
    auto name = [&](int i) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "v%03d", i);
      return std::string(buf);
    };
    std::int64_t t = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (rng.next_double() < p)
          records.push_back(CallRecord{name(i), name(j), "T1", t += 10, t + 30});
    if (records.empty())
      records.push_back(CallRecord{name(0), name(1), "T1", 10, 40});
    auto graph = build_comm_graph(records);
    const int v = static_cast<int>(graph.vertex_count());

    const int kInf = 1 << 28;
    std::vector<std::vector<int>> oracle(v, std::vector<int>(v, kInf));
    for (int i = 0; i < v; ++i) oracle[i][i] = 0;
    graph.for_each_edge([&](std::uint32_t a, std::uint32_t b) {
      oracle[a][b] = oracle[b][a] = 1;
    });
    for (int k = 0; k < v; ++k)
      for (int i = 0; i < v; ++i)
        for (int j = 0; j < v; ++j)
          oracle[i][j] = std::min(oracle[i][j], oracle[i][k] + oracle[k][j]);

    for (int i = 0; i < v; ++i) {
      for (int j = i + 1; j < v; ++j) {
        auto d = social_distance(graph, PairKey::canonical(graph.vertex_name(i),
                                                           graph.vertex_name(j)));
        int expected = oracle[i][j];
        if (d.is_connected() ? (d.hop_count() != expected) : (expected < kInf))
          return "graph " + std::to_string(g) + ": distance mismatch " +
                 graph.vertex_name(i) + "," + graph.vertex_name(j);
      }
    }
  }
  return {};
}

// --- C10: determinism and scale -------------------------------------------------
std::string c10_scale() {
  const char* cli = ATLAS_CLI_PATH;
  fsys::path root = fsys::temp_directory_path() / "atlas_acceptance_scale";
  fsys::remove_all(root);
  fsys::create_directories(root);
  auto sh = [](const std::string& cmd) { return std::system(cmd.c_str()); };

  // ~10.08M records; generation is outside the timed budget
  fsys::path gen = root / "gen";
  if (sh(std::string(cli) + " generate scale --out-dir " + gen.string() +
         " > /dev/null") != 0)
    return "generate failed";
  auto gen_manifest = slurp(gen / "scenario_manifest.json");
  if (gen_manifest.find("10080000") == std::string::npos)
    return "expected 10,080,000 records in the scenario manifest";

  struct RunOut {
    fsys::path enc, ana;
    double seconds;
  };
  std::vector<RunOut> runs;
  for (int workers : {1, 4, 8}) {
    RunOut run;
    run.enc = root / ("enc_w" + std::to_string(workers));
    run.ana = root / ("ana_w" + std::to_string(workers));
    auto t0 = Clock::now();
    if (sh(std::string(cli) + " encounters " + (gen / "cdr.csv").string() + " " +
           (gen / "towers.csv").string() + " --workers " +
           std::to_string(workers) + " --out-dir " + run.enc.string() +
           " > /dev/null") != 0)
      return "encounters failed (workers " + std::to_string(workers) + ")";
    if (sh(std::string(cli) + " analyze " + (run.enc / "episodes.csv").string() +
           " " + (gen / "cdr.csv").string() + " " + (gen / "towers.csv").string() +
           " --workers " + std::to_string(workers) + " --out-dir " +
           run.ana.string() + " > /dev/null") != 0)
      return "analyze failed (workers " + std::to_string(workers) + ")";
    run.seconds = seconds_since(t0);
    runs.push_back(run);
  }
  for (const auto& run : runs)
    if (run.seconds >= 300.0)
      return "end-to-end took " + std::to_string(run.seconds) + "s >= 300s";

  auto episodes0 = slurp(runs[0].enc / "episodes.csv");
  for (std::size_t r = 1; r < runs.size(); ++r)
    if (slurp(runs[r].enc / "episodes.csv") != episodes0)
      return "episodes.csv differs across worker counts";
  for (const auto& entry : fsys::directory_iterator(runs[0].ana)) {
    auto name = entry.path().filename().string();
    if (name == "manifest.json") continue;  // timings differ by design
    auto bytes = slurp(entry.path());
    for (std::size_t r = 1; r < runs.size(); ++r)
      if (slurp(runs[r].ana / name) != bytes)
        return name + " differs across worker counts";
  }

  // identical rerun at the same worker count
  fsys::path enc_again = root / "enc_again";
  if (sh(std::string(cli) + " encounters " + (gen / "cdr.csv").string() + " " +
         (gen / "towers.csv").string() + " --workers 4 --out-dir " +
         enc_again.string() + " > /dev/null") != 0)
    return "rerun encounters failed";
  if (slurp(enc_again / "episodes.csv") != episodes0)
    return "episodes.csv differs across identical reruns";

  fsys::remove_all(root);
  return {};
}

}  // namespace

int main() {
  std::vector<Criterion> criteria = {
      {"C1 encounter oracle equivalence (200 randomized datasets, exact)",
       c1_oracle_equivalence},
      {"C2 gravity recovery, exact (planted 0.5/0.5/1.0, 1e-6)", c2_gravity_exact},
      {"C3 gravity recovery, noisy (planted 0.38/0.407/0.823, 95/100 within 0.05)",
       c3_gravity_noisy},
      {"C4 24-hour periodicity signature (commuters preset)", c4_daily_periodicity},
      {"C5 weekday/weekend separation (weekend-crowd preset, off-diag < 5%)",
       c5_weekday_weekend},
      {"C6 familiar-stranger exclusion (overlap preset, exact 80%)",
       c6_familiar_stranger_exclusion},
      {"C7 negative distance-encounter correlation (spearman < -0.3)",
       c7_distance_correlation},
      {"C8 degree filter correctness (5 planted hubs, exact + idempotent)",
       c8_degree_filter},
      {"C9 BFS oracle equivalence (50 graphs <= 200 vertices, exact)",
       c9_bfs_oracle},
      {"C10 determinism and scale (10M records < 5 min, workers 1/4/8)",
       c10_scale},
  };

  int failures = 0;
  for (auto& criterion : criteria) {
    auto start = Clock::now();
    std::string error;
    try {
      error = criterion.run();
    } catch (const std::exception& e) {
      error = std::string("exception: ") + e.what();
    }
    double elapsed = seconds_since(start);
    if (error.empty()) {
      std::printf("[PASS] %s (%.1fs)\n", criterion.name.c_str(), elapsed);
    } else {
      std::printf("[FAIL] %s (%.1fs): %s\n", criterion.name.c_str(), elapsed,
                  error.c_str());
      ++failures;
    }
    std::fflush(stdout);
  }
  if (failures) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}

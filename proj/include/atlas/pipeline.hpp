#pragma once

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "atlas/cdr.hpp"
#include "atlas/config.hpp"
#include "atlas/core.hpp"
#include "atlas/encounter.hpp"
#include "atlas/network.hpp"
#include "atlas/presets.hpp"
#include "atlas/scenario_io.hpp"
#include "atlas/spatial.hpp"
#include "atlas/synthgen.hpp"
#include "atlas/temporal.hpp"

namespace atlas {

namespace fs = std::filesystem;

enum class PairScope { familiar_strangers, all_pairs };

inline std::string_view to_string(PairScope s) {
  return s == PairScope::familiar_strangers ? "familiar_strangers" : "all_pairs";
}

struct RunOptions {
  AnalysisConfig config;
  int workers = 0;  // 0: ENCOUNTER_ATLAS_WORKERS, then hardware concurrency
  bool strict = false;
  fs::path out_dir = ".";
  PairScope scope = PairScope::familiar_strangers;
};

inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("ENCOUNTER_ATLAS_WORKERS")) {
    std::int64_t v;
    if (csv::parse_i64(env, v) && v > 0) return static_cast<int>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace detail {

inline std::string read_file(const fs::path& path, std::string_view stage) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(std::string(stage) + ": cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) fail(std::string(stage) + ": read failed for " + path.string());
  return std::move(buf).str();
}

inline void ensure_out_dir(const fs::path& dir, std::string_view stage) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec && !fs::is_directory(dir))
    fail(std::string(stage) + ": cannot create output directory " + dir.string());
}

inline std::ofstream open_output(const fs::path& path, std::string_view stage) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(std::string(stage) + ": cannot write " + path.string());
  return out;
}

inline std::string digest_hex(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes.data(), bytes.size())));
  return buf;
}

class StageTimer {
 public:
  template <typename Fn>
  auto time(const std::string& name, Fn&& fn) {
    auto start = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      record(name, start);
    } else {
      auto result = fn();
      record(name, start);
      return result;
    }
  }

  const std::map<std::string, std::int64_t>& timings() const { return ms_; }

 private:
  void record(const std::string& name, std::chrono::steady_clock::time_point start) {
    auto end = std::chrono::steady_clock::now();
    ms_[name] =
        std::chrono::duration_cast<std::chrono::milliseconds>(end - start).count();
  }
  std::map<std::string, std::int64_t> ms_;
};

inline nlohmann::json config_json(const RunOptions& opts, int workers) {
  const AnalysisConfig& c = opts.config;
  return nlohmann::json{
      {"window_seconds", c.window_seconds},
      {"max_degree", c.max_degree},
      {"iet_bin_seconds", c.iet_bin_seconds},
      {"min_edge_pairs", c.min_edge_pairs},
      {"distance_floor_km", c.distance_floor_km},
      {"presence_attribution", std::string(to_string(c.presence_attribution))},
      {"rng_seed", c.rng_seed},
      {"tz_offset_hours", c.tz_offset_hours},
      {"distance_buckets", c.distance_buckets.to_string()},
      {"workers", workers},
      {"strict", opts.strict},
      {"scope", std::string(to_string(opts.scope))},
  };
}

inline nlohmann::json input_json(const fs::path& path, std::string_view bytes) {
  return nlohmann::json{{"path", path.string()},
                        {"bytes", bytes.size()},
                        {"digest_fnv1a64", digest_hex(bytes)}};
}

inline void write_manifest(const fs::path& path, const nlohmann::json& manifest,
                           std::string_view stage) {
  auto out = open_output(path, stage);
  out << manifest.dump(2) << '\n';
  if (!out) fail(std::string(stage) + ": cannot write " + path.string());
}

// Streaming presence extraction with interning; ranks follow canonical id
// order so the compact join emits bit-identical output to the string API.
struct StreamedPresence {
  std::vector<std::string> user_names;   // sorted
  std::vector<std::string> tower_names;  // sorted
  std::vector<atlas::detail::CompactEvent> events;  // deduped
  std::int64_t records_parsed = 0;
  std::int64_t parse_issues = 0;
};

inline StreamedPresence stream_presence(std::string_view cdr_text,
                                        PresenceAttribution attribution,
                                        bool strict) {
  StreamedPresence out;
  NameInterner users;
  NameInterner towers;
  scan_cdr(
      cdr_text, strict,
      [&](std::size_t, const CdrView& v) {
        ++out.records_parsed;
        std::uint32_t tower = towers.intern(v.tower_id);
        out.events.push_back(atlas::detail::CompactEvent{
            tower, users.intern(v.caller_id), v.start_time});
        if (attribution == PresenceAttribution::both_parties)
          out.events.push_back(atlas::detail::CompactEvent{
              tower, users.intern(v.callee_id), v.start_time});
      },
      [&](const ParseIssue&) { ++out.parse_issues; });

  // Remap intern ids to canonical ranks.
  std::vector<std::string> user_names = users.take();
  std::vector<std::string> tower_names = towers.take();
  auto rank_permutation = [](const std::vector<std::string>& names) {
    std::vector<std::uint32_t> order(names.size());
    for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::uint32_t a, std::uint32_t b) { return names[a] < names[b]; });
    std::vector<std::uint32_t> rank(names.size());
    for (std::uint32_t r = 0; r < order.size(); ++r) rank[order[r]] = r;
    return rank;
  };
  std::vector<std::uint32_t> user_rank = rank_permutation(user_names);
  std::vector<std::uint32_t> tower_rank = rank_permutation(tower_names);
  out.user_names.resize(user_names.size());
  out.tower_names.resize(tower_names.size());
  for (std::uint32_t i = 0; i < user_names.size(); ++i)
    out.user_names[user_rank[i]] = std::move(user_names[i]);
  for (std::uint32_t i = 0; i < tower_names.size(); ++i)
    out.tower_names[tower_rank[i]] = std::move(tower_names[i]);
  for (auto& e : out.events) {
    e.user = user_rank[e.user];
    e.tower = tower_rank[e.tower];
  }

  // Collapse duplicate (user, tower, timestamp) triples.
  std::sort(out.events.begin(), out.events.end(), [](const auto& a, const auto& b) {
    return std::tie(a.tower, a.time, a.user) < std::tie(b.tower, b.time, b.user);
  });
  out.events.erase(std::unique(out.events.begin(), out.events.end(),
                               [](const auto& a, const auto& b) {
                                 return a.tower == b.tower && a.time == b.time &&
                                        a.user == b.user;
                               }),
                   out.events.end());
  return out;
}

}  // namespace detail

struct GenerateResult {
  fs::path cdr_path;
  fs::path towers_path;
  fs::path scenario_path;
  fs::path manifest_path;
  GeneratedTruth truth;
};

/// Resolves `scenario_ref` as a preset name first, then as a scenario file
/// path. Writes cdr.csv, towers.csv, scenario.used and scenario_manifest.json.
inline GenerateResult run_generate(const std::string& scenario_ref,
                                   const fs::path& out_dir,
                                   std::optional<std::uint64_t> seed_override = {}) {
  constexpr std::string_view kStage = "generate";
  ScenarioConfig scenario;
  std::string source;
  if (auto preset = scenario_preset(scenario_ref)) {
    scenario = std::move(*preset);
    source = "preset:" + scenario_ref;
  } else if (fs::exists(scenario_ref)) {
    try {
      scenario = parse_scenario(detail::read_file(scenario_ref, kStage));
    } catch (const Error& e) {
      fail("generate: " + std::string(e.what()));
    }
    source = "file:" + scenario_ref;
  } else {
    fail("generate: '" + scenario_ref +
         "' is neither a preset name nor a scenario file");
  }
  if (seed_override) scenario.seed = *seed_override;

  detail::ensure_out_dir(out_dir, kStage);
  GenerateResult result;
  result.cdr_path = out_dir / "cdr.csv";
  result.towers_path = out_dir / "towers.csv";
  result.scenario_path = out_dir / "scenario.used";
  result.manifest_path = out_dir / "scenario_manifest.json";

  detail::StageTimer timer;
  timer.time("generate", [&] {
    auto cdr_out = detail::open_output(result.cdr_path, kStage);
    result.truth = generate_cdr_csv(cdr_out, scenario);
    if (!cdr_out) fail("generate: write failed for " + result.cdr_path.string());
  });
  {
    auto towers_out = detail::open_output(result.towers_path, kStage);
    write_towers_csv(towers_out, scenario.towers);
  }
  {
    auto scenario_out = detail::open_output(result.scenario_path, kStage);
    write_scenario(scenario_out, scenario);
  }

  nlohmann::json manifest{
      {"command", "generate"},
      {"source", source},
      {"seed", scenario.seed},
      {"outputs", {"cdr.csv", "towers.csv", "scenario.used"}},
      {"counts",
       {{"records", result.truth.record_count},
        {"agents", result.truth.agent_count},
        {"towers", scenario.towers.size()},
        {"planted_edges", result.truth.planted_edges.size()}}},
      {"timings_ms", timer.timings()},
      {"tool", "encounter-atlas"},
  };
  if (result.truth.gravity_params) {
    manifest["gravity_truth"] = {
        {"c", result.truth.gravity_params->c},
        {"alpha", result.truth.gravity_params->alpha},
        {"beta", result.truth.gravity_params->beta},
        {"gamma", result.truth.gravity_params->gamma},
        {"transitions", result.truth.gravity_transitions},
        {"popularity_scale", result.truth.gravity_popularity_scale},
    };
  }
  detail::write_manifest(result.manifest_path, manifest, kStage);
  return result;
}

struct EncountersResult {
  fs::path episodes_path;
  fs::path manifest_path;
  std::int64_t records_parsed = 0;
  std::int64_t parse_issues = 0;
  std::int64_t users = 0;
  std::int64_t presence_events = 0;
  std::int64_t episodes = 0;
};

/// CDR + towers -> canonical episode file. Episode output is independent of
/// the worker count.
inline EncountersResult run_encounters(const fs::path& cdr_path,
                                       const fs::path& towers_path,
                                       const RunOptions& opts) {
  constexpr std::string_view kStage = "encounters";
  opts.config.validate();
  const int workers = resolve_workers(opts.workers);

  detail::StageTimer timer;
  std::string cdr_text = timer.time("read_inputs", [&] {
    return detail::read_file(cdr_path, kStage);
  });
  std::string towers_text = detail::read_file(towers_path, kStage);
  try {
    load_towers(towers_text);  // validation only at this stage
  } catch (const Error& e) {
    fail("encounters: " + std::string(e.what()));
  }

  detail::StreamedPresence presence = timer.time("extract_presence", [&] {
    try {
      return detail::stream_presence(cdr_text, opts.config.presence_attribution,
                                     opts.strict);
    } catch (const Error& e) {
      fail("encounters: " + std::string(e.what()));
    }
  });

  const auto presence_event_count = static_cast<std::int64_t>(presence.events.size());
  auto episodes = timer.time("detect_encounters", [&] {
    return atlas::detail::join_encounters(std::move(presence.events),
                                          opts.config.window_seconds, workers);
  });

  detail::ensure_out_dir(opts.out_dir, kStage);
  EncountersResult result;
  result.episodes_path = opts.out_dir / "episodes.csv";
  result.manifest_path = opts.out_dir / "manifest.json";
  result.records_parsed = presence.records_parsed;
  result.parse_issues = presence.parse_issues;
  result.users = static_cast<std::int64_t>(presence.user_names.size());
  result.episodes = static_cast<std::int64_t>(episodes.size());

  timer.time("write_episodes", [&] {
    auto out = detail::open_output(result.episodes_path, kStage);
    std::string line;
    for (const auto& ep : episodes) {
      line.clear();
      line += presence.user_names[ep.user_a];
      line += ',';
      line += presence.user_names[ep.user_b];
      line += ',';
      line += presence.tower_names[ep.tower];
      line += ',';
      csv::append(line, ep.first_time);
      line += ',';
      csv::append(line, ep.last_time);
      line += ',';
      csv::append(line, ep.event_count);
      line += '\n';
      out << line;
    }
    if (!out) fail("encounters: write failed for " + result.episodes_path.string());
  });

  result.presence_events = presence_event_count;

  nlohmann::json manifest{
      {"command", "encounters"},
      {"config", detail::config_json(opts, workers)},
      {"counts",
       {{"records_parsed", result.records_parsed},
        {"parse_issues", result.parse_issues},
        {"users", result.users},
        {"presence_events", result.presence_events},
        {"episodes", result.episodes}}},
      {"inputs",
       {detail::input_json(cdr_path, cdr_text),
        detail::input_json(towers_path, towers_text)}},
      {"outputs", {"episodes.csv"}},
      {"timings_ms", timer.timings()},
      {"tool", "encounter-atlas"},
  };
  detail::write_manifest(result.manifest_path, manifest, kStage);
  return result;
}

struct AnalyzeResult {
  fs::path manifest_path;
  std::vector<std::string> outputs;
  std::int64_t records_parsed = 0;
  std::int64_t users = 0;
  std::int64_t removed_by_degree_filter = 0;
  std::int64_t episodes = 0;
  std::int64_t familiar_stranger_pairs = 0;
  std::optional<GravityFit> gravity_fit;
  std::vector<std::string> notes;
};

/// Full export bundle from an episode file plus the CDR and tower inputs.
inline AnalyzeResult run_analyze(const fs::path& episodes_path,
                                 const fs::path& cdr_path,
                                 const fs::path& towers_path,
                                 const RunOptions& opts) {
  constexpr std::string_view kStage = "analyze";
  opts.config.validate();
  const int workers = resolve_workers(opts.workers);

  detail::StageTimer timer;
  AnalyzeResult result;

  std::string episodes_text = detail::read_file(episodes_path, kStage);
  std::string cdr_text = detail::read_file(cdr_path, kStage);
  std::string towers_text = detail::read_file(towers_path, kStage);

  TowerTable towers;
  std::vector<EncounterEpisode> episodes;
  try {
    towers = load_towers(towers_text);
    episodes = timer.time("read_episodes",
                          [&] { return read_episodes_csv(episodes_text); });
  } catch (const Error& e) {
    fail("analyze: " + std::string(e.what()));
  }
  result.episodes = static_cast<std::int64_t>(episodes.size());

  // Communication graph from the raw records.
  CommGraphBuilder builder;
  std::int64_t records_parsed = 0;
  timer.time("comm_graph", [&] {
    try {
      scan_cdr(
          cdr_text, opts.strict,
          [&](std::size_t, const CdrView& v) {
            ++records_parsed;
            builder.add_contact(v.caller_id, v.callee_id);
          },
          [&](const ParseIssue&) {});
    } catch (const Error& e) {
      fail("analyze: " + std::string(e.what()));
    }
  });
  result.records_parsed = records_parsed;
  CommGraph full_graph = builder.build();
  result.users = static_cast<std::int64_t>(full_graph.vertex_count());

  DegreeFilterResult filtered = timer.time("degree_filter", [&] {
    return filter_high_degree(full_graph, opts.config.max_degree);
  });
  result.removed_by_degree_filter =
      static_cast<std::int64_t>(filtered.removed.size());

  auto counts = pair_encounter_counts(episodes);
  std::vector<FamiliarStrangerPair> fs_pairs = timer.time("familiar_strangers", [&] {
    return familiar_stranger_pairs(counts, filtered.graph, filtered.removed);
  });
  result.familiar_stranger_pairs = static_cast<std::int64_t>(fs_pairs.size());
  if (fs_pairs.empty())
    result.notes.push_back("no familiar-stranger pairs; distance curve is empty");

  // Episode scope for the pair-level analytics.
  std::vector<EncounterEpisode> scoped;
  std::span<const EncounterEpisode> pair_scope_episodes(episodes);
  if (opts.scope == PairScope::familiar_strangers) {
    std::unordered_set<PairKey, PairKeyHash> fs_keys;
    fs_keys.reserve(fs_pairs.size() * 2);
    for (const auto& p : fs_pairs) fs_keys.insert(p.pair);
    scoped.reserve(episodes.size());
    for (const auto& ep : episodes)
      if (fs_keys.contains(ep.pair)) scoped.push_back(ep);
    pair_scope_episodes = scoped;
  }

  detail::ensure_out_dir(opts.out_dir, kStage);
  auto export_file = [&](const char* name, auto&& writer) {
    auto out = detail::open_output(opts.out_dir / name, kStage);
    writer(out);
    if (!out) fail("analyze: write failed for " + (opts.out_dir / name).string());
    result.outputs.push_back(name);
  };

  timer.time("temporal", [&] {
    HourlyProfile profile = hourly_profile(episodes, opts.config.tz_offset_hours);
    export_file("hourly_profile.csv",
                [&](std::ostream& os) { write_hourly_profile_csv(os, profile); });
    InterEventDistribution iet = inter_event_distribution(
        pair_scope_episodes, opts.config.iet_bin_seconds);
    export_file("inter_event.csv",
                [&](std::ostream& os) { write_inter_event_csv(os, iet); });
    ConsecutiveTimeMatrix consec =
        consecutive_time_matrix(pair_scope_episodes, opts.config.tz_offset_hours);
    export_file("consec_matrix.csv",
                [&](std::ostream& os) { write_consec_matrix_csv(os, consec); });
    export_file("consec_hour_matrix.csv", [&](std::ostream& os) {
      write_consec_hour_matrix_csv(os, consec);
    });
  });

  timer.time("spatial", [&] {
    auto stats = tower_summary(episodes);
    export_file("tower_summary.csv",
                [&](std::ostream& os) { write_tower_summary_csv(os, stats); });
    FlowMatrix flows = consecutive_flows(pair_scope_episodes);
    try {
      export_file("flows.csv",
                  [&](std::ostream& os) { write_flows_csv(os, flows, towers); });
    } catch (const Error& e) {
      fail("analyze: flows: " + std::string(e.what()));
    }
    std::optional<std::string> fit_error;
    try {
      result.gravity_fit = fit_gravity(flows, towers, opts.config.distance_floor_km);
    } catch (const Error& e) {
      fit_error = e.what();
    }
    if (result.gravity_fit) {
      export_file("gravity_fit.json", [&](std::ostream& os) {
        write_gravity_fit_json(os, *result.gravity_fit);
      });
    } else {
      result.notes.push_back("gravity fit unavailable: " + *fit_error);
      export_file("gravity_fit.json", [&](std::ostream& os) {
        nlohmann::json j{{"error", *fit_error},
                         {"distance_floor_km", opts.config.distance_floor_km}};
        os << j.dump(2) << '\n';
      });
    }
    PoiTransitionMatrix poi = poi_transition_matrix(flows, towers);
    if (poi.skipped_flow_cells > 0)
      result.notes.push_back(
          csv::format(poi.skipped_flow_cells) +
          " flow cells skipped in POI matrix (tower without category)");
    export_file("poi_matrix.csv",
                [&](std::ostream& os) { write_poi_matrix_csv(os, poi); });
    auto edges = reencounter_network(pair_scope_episodes, opts.config.min_edge_pairs);
    export_file("reencounter_edges.csv",
                [&](std::ostream& os) { write_reencounter_csv(os, edges); });
  });

  timer.time("distance_curve", [&] {
    fill_social_distances(fs_pairs, filtered.graph);
    DistanceCurve curve =
        distance_curve(fs_pairs, filtered.graph, opts.config.distance_buckets);
    export_file("distance_curve.csv",
                [&](std::ostream& os) { write_distance_curve_csv(os, curve); });
  });

  result.manifest_path = opts.out_dir / "manifest.json";
  nlohmann::json manifest{
      {"command", "analyze"},
      {"config", detail::config_json(opts, workers)},
      {"counts",
       {{"records_parsed", result.records_parsed},
        {"users", result.users},
        {"users_removed_by_degree_filter", result.removed_by_degree_filter},
        {"episodes", result.episodes},
        {"familiar_stranger_pairs", result.familiar_stranger_pairs}}},
      {"inputs",
       {detail::input_json(episodes_path, episodes_text),
        detail::input_json(cdr_path, cdr_text),
        detail::input_json(towers_path, towers_text)}},
      {"notes", result.notes},
      {"outputs", result.outputs},
      {"timings_ms", timer.timings()},
      {"tool", "encounter-atlas"},
  };
  detail::write_manifest(result.manifest_path, manifest, kStage);
  result.outputs.push_back("manifest.json");
  return result;
}

}  // namespace atlas

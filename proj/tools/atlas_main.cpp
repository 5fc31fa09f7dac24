// encounter-atlas: familiar-stranger detection and analysis over CDR streams.
//
//   encounter-atlas generate <scenario|preset> --out-dir DIR [--seed N]
//   encounter-atlas encounters <cdr.csv> <towers.csv> --out-dir DIR [flags]
//   encounter-atlas analyze <episodes.csv> <cdr.csv> <towers.csv> --out-dir DIR [flags]

#include <CLI11.hpp>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "atlas/atlas.hpp"

namespace {

struct FlagValues {
  std::optional<std::int64_t> window_seconds;
  std::optional<std::int64_t> max_degree;
  std::optional<std::int64_t> iet_bin_seconds;
  std::optional<std::int64_t> min_edge_pairs;
  std::optional<double> distance_floor_km;
  std::optional<int> tz_offset;
  std::optional<std::string> attribution;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  bool strict = false;
  std::string out_dir = ".";
  std::optional<std::string> config_path;
  std::string scope = "fs";
};

void add_analysis_flags(CLI::App* cmd, FlagValues& flags) {
  cmd->add_option("--window-seconds", flags.window_seconds,
                  "Co-location window in seconds");
  cmd->add_option("--max-degree", flags.max_degree,
                  "Degree-filter threshold (distinct contacts)");
  cmd->add_option("--iet-bin-seconds", flags.iet_bin_seconds,
                  "Inter-event histogram bin width");
  cmd->add_option("--min-edge-pairs", flags.min_edge_pairs,
                  "Minimum transitions per reencounter edge");
  cmd->add_option("--distance-floor-km", flags.distance_floor_km,
                  "Minimum distance admitted to the gravity fit");
  cmd->add_option("--tz-offset", flags.tz_offset,
                  "Fixed UTC offset in hours for hour-of-day bucketing");
  cmd->add_option("--attribution", flags.attribution,
                  "Presence attribution: caller or both")
      ->check(CLI::IsMember({"caller", "both"}));
  cmd->add_option("--seed", flags.seed, "RNG seed recorded in the manifest");
  cmd->add_option("--workers", flags.workers,
                  "Worker threads (default: ENCOUNTER_ATLAS_WORKERS or hardware)");
  cmd->add_flag("--strict", flags.strict, "Abort on the first malformed input line");
  cmd->add_option("--out-dir", flags.out_dir, "Output directory");
  cmd->add_option("--config", flags.config_path, "key=value config file");
  cmd->add_option("--scope", flags.scope,
                  "Pair scope for analytics: fs (familiar strangers) or all")
      ->check(CLI::IsMember({"fs", "all"}));
}

// defaults -> config file -> explicit flags
atlas::RunOptions make_options(const FlagValues& flags) {
  atlas::RunOptions opts;
  if (flags.config_path) {
    std::ifstream in(*flags.config_path, std::ios::binary);
    if (!in) atlas::fail("config: cannot open " + *flags.config_path);
    std::string text(std::istreambuf_iterator<char>(in), {});
    opts.config = atlas::load_config(text, opts.config);
  }
  if (flags.window_seconds) opts.config.window_seconds = *flags.window_seconds;
  if (flags.max_degree) opts.config.max_degree = *flags.max_degree;
  if (flags.iet_bin_seconds) opts.config.iet_bin_seconds = *flags.iet_bin_seconds;
  if (flags.min_edge_pairs) opts.config.min_edge_pairs = *flags.min_edge_pairs;
  if (flags.distance_floor_km) opts.config.distance_floor_km = *flags.distance_floor_km;
  if (flags.tz_offset) opts.config.tz_offset_hours = *flags.tz_offset;
  if (flags.attribution)
    opts.config.presence_attribution = *flags.attribution == "both"
                                           ? atlas::PresenceAttribution::both_parties
                                           : atlas::PresenceAttribution::caller_only;
  if (flags.seed) opts.config.rng_seed = *flags.seed;
  if (flags.workers) opts.workers = *flags.workers;
  opts.strict = flags.strict;
  opts.out_dir = flags.out_dir;
  opts.scope = flags.scope == "all" ? atlas::PairScope::all_pairs
                                    : atlas::PairScope::familiar_strangers;
  opts.config.validate();
  return opts;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Familiar-stranger encounter detection and analysis toolkit"};
  app.require_subcommand(1);

  // generate
  std::string scenario_ref;
  std::string gen_out_dir = ".";
  std::optional<std::uint64_t> gen_seed;
  CLI::App* generate =
      app.add_subcommand("generate", "Generate a synthetic CDR dataset");
  generate->add_option("scenario", scenario_ref, "Preset name or scenario file")
      ->required();
  generate->add_option("--out-dir", gen_out_dir, "Output directory");
  generate->add_option("--seed", gen_seed, "Override the scenario seed");

  // encounters
  FlagValues enc_flags;
  std::string enc_cdr, enc_towers;
  CLI::App* encounters = app.add_subcommand(
      "encounters", "Detect familiar-stranger encounter episodes");
  encounters->add_option("cdr", enc_cdr, "CDR csv file")->required();
  encounters->add_option("towers", enc_towers, "Tower csv file")->required();
  add_analysis_flags(encounters, enc_flags);

  // analyze
  FlagValues ana_flags;
  std::string ana_episodes, ana_cdr, ana_towers;
  CLI::App* analyze =
      app.add_subcommand("analyze", "Produce the full analysis export bundle");
  analyze->add_option("episodes", ana_episodes, "Episode csv file")->required();
  analyze->add_option("cdr", ana_cdr, "CDR csv file")->required();
  analyze->add_option("towers", ana_towers, "Tower csv file")->required();
  add_analysis_flags(analyze, ana_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) {
      auto result = atlas::run_generate(scenario_ref, gen_out_dir, gen_seed);
      std::cout << "generate: " << result.truth.record_count << " records -> "
                << result.cdr_path.string() << '\n';
    } else if (encounters->parsed()) {
      auto opts = make_options(enc_flags);
      auto result = atlas::run_encounters(enc_cdr, enc_towers, opts);
      std::cout << "encounters: " << result.records_parsed << " records ("
                << result.parse_issues << " issues), " << result.episodes
                << " episodes -> " << result.episodes_path.string() << '\n';
    } else if (analyze->parsed()) {
      auto opts = make_options(ana_flags);
      auto result = atlas::run_analyze(ana_episodes, ana_cdr, ana_towers, opts);
      std::cout << "analyze: " << result.episodes << " episodes, "
                << result.familiar_stranger_pairs
                << " familiar-stranger pairs, " << result.outputs.size()
                << " exports -> " << opts.out_dir.string() << '\n';
      for (const std::string& note : result.notes)
        std::cout << "  note: " << note << '\n';
    }
  } catch (const atlas::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

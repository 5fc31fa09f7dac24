#include <gtest/gtest.h>

#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "atlas/network.hpp"
#include "atlas/presets.hpp"
#include "atlas/scenario_io.hpp"
#include "atlas/synthgen.hpp"

using namespace atlas;

namespace {

ScenarioConfig two_mutual_commuters(std::int64_t jitter = 0) {
  ScenarioConfig scenario;
  scenario.days = 7;
  scenario.tz_offset_hours = 2;
  scenario.seed = 5;
  scenario.base_epoch = default_base_epoch(2);
  Tower t;
  t.tower_id = "T1";
  t.latitude = 42.5;
  t.longitude = 1.5;
  scenario.towers.add(t);
  for (const char* id : {"A", "B"}) {
    AgentSpec agent;
    agent.agent_id = id;
    agent.home_tower = "T1";
    agent.work_tower = "T1";
    agent.call_rate = 1.0;
    agent.jitter_seconds = jitter;
    agent.contact_set = {id[0] == 'A' ? "B" : "A"};
    agent.schedule.push_back(ScheduleWindow{kAllDays, 8, 9, "T1"});
    scenario.agents.push_back(agent);
  }
  return scenario;
}

std::string generate_csv(const ScenarioConfig& scenario) {
  std::ostringstream out;
  generate_cdr_csv(out, scenario);
  return out.str();
}

}  // namespace

TEST(Synthgen, EmptyContactSetYieldsZeroRecords) {
  ScenarioConfig scenario = two_mutual_commuters();
  scenario.agents[0].contact_set.clear();
  scenario.agents[1].contact_set.clear();
  EXPECT_TRUE(generate_cdr(scenario).empty());
}

TEST(Synthgen, SameSeedIsByteIdentical) {
  ScenarioConfig scenario = make_commuters_scenario(123, 40);
  EXPECT_EQ(generate_csv(scenario), generate_csv(scenario));
  ScenarioConfig other = make_commuters_scenario(124, 40);
  EXPECT_NE(generate_csv(scenario), generate_csv(other));
}

TEST(Synthgen, DailyMutualPairYieldsExactlySevenEpisodes) {
  auto records = generate_cdr(two_mutual_commuters());
  auto events = extract_presence(records, PresenceAttribution::caller_only);
  auto episodes = detect_encounters(events, 3600);
  ASSERT_EQ(episodes.size(), 7u);
  for (const auto& ep : episodes) {
    EXPECT_EQ(ep.pair, (PairKey{"A", "B"}));
    EXPECT_EQ(ep.tower_id, "T1");
  }
  auto counts = pair_encounter_counts(episodes);
  EXPECT_EQ(counts.at(PairKey{"A", "B"}), 7);
}

TEST(Synthgen, RecordsAlwaysPassValidation) {
  for (const auto& name : scenario_preset_names()) {
    if (name == "scale") continue;  // covered at acceptance scale
    auto scenario = scenario_preset(name);
    ASSERT_TRUE(scenario.has_value()) << name;
    std::string csv_text = generate_csv(*scenario);
    auto parsed = parse_cdr(csv_text, /*strict=*/true);
    EXPECT_EQ(parsed.issues.size(), 0u) << name;
    EXPECT_GT(parsed.records.size(), 0u) << name;
    for (const auto& r : parsed.records)
      ASSERT_TRUE(scenario->towers.contains(r.tower_id)) << name;
  }
}

TEST(Synthgen, OutputSortedByStartTime) {
  auto records = generate_cdr(make_weekend_crowd_scenario());
  for (std::size_t i = 1; i < records.size(); ++i)
    EXPECT_LE(records[i - 1].start_time, records[i].start_time);
}

TEST(Synthgen, PlantedEdgesExactlyRecovered) {
  for (const auto& name : {"commuters", "overlap", "social-decay"}) {
    auto scenario = scenario_preset(name);
    auto records = generate_cdr(*scenario);
    std::ostringstream out;
    GeneratedTruth truth = generate_cdr_csv(out, *scenario);
    auto graph = build_comm_graph(records);
    std::set<PairKey> recovered;
    graph.for_each_edge([&](std::uint32_t a, std::uint32_t b) {
      recovered.insert(PairKey::canonical(graph.vertex_name(a), graph.vertex_name(b)));
    });
    std::set<PairKey> planted(truth.planted_edges.begin(), truth.planted_edges.end());
    EXPECT_EQ(recovered, planted) << name;
  }
}

TEST(Synthgen, CoverageTopUpAddsNoPresence) {
  // every planted contact is realized even when the uniform callee draw
  // happens to miss it, and encounters stay untouched
  ScenarioConfig scenario = two_mutual_commuters();
  scenario.agents[0].contact_set = {"B", "C", "D", "E"};
  auto with_coverage = generate_cdr(scenario);
  scenario.ensure_contact_coverage = false;
  auto without_coverage = generate_cdr(scenario);
  auto graph = build_comm_graph(with_coverage);
  EXPECT_TRUE(graph.has_edge("A", "C"));
  EXPECT_TRUE(graph.has_edge("A", "D"));
  EXPECT_TRUE(graph.has_edge("A", "E"));
  auto eps_with = detect_encounters(
      extract_presence(with_coverage, PresenceAttribution::caller_only), 3600);
  auto eps_without = detect_encounters(
      extract_presence(without_coverage, PresenceAttribution::caller_only), 3600);
  EXPECT_EQ(eps_with, eps_without);
}

TEST(Synthgen, TimeGridSnapsCallTimes) {
  ScenarioConfig scenario = two_mutual_commuters(1800);
  scenario.time_grid_seconds = 900;
  for (const auto& r : generate_cdr(scenario))
    EXPECT_EQ(r.start_time % 900, 0) << r.start_time;
}

TEST(Synthgen, UnknownTowerReferenceNamesAgent) {
  ScenarioConfig scenario = two_mutual_commuters();
  scenario.agents[1].schedule[0].tower_id = "NOPE";
  try {
    generate_cdr(scenario);
    FAIL() << "expected validation error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("agent B"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("NOPE"), std::string::npos);
  }
}

TEST(Synthgen, GravityModeRealizesProportionalPopularity) {
  ScenarioConfig scenario = make_gravity_grid_scenario();
  auto records = generate_cdr(scenario);
  std::ostringstream sink;
  GeneratedTruth truth = generate_cdr_csv(sink, scenario);
  auto events = extract_presence(records, PresenceAttribution::caller_only);
  auto episodes = detect_encounters(events, 3600, 4);
  FlowMatrix flows = consecutive_flows(episodes);
  ASSERT_TRUE(scenario.gravity.has_value());
  for (const auto& [tower_id, weight] : scenario.gravity->popularity) {
    ASSERT_TRUE(flows.popularity.contains(tower_id)) << tower_id;
    EXPECT_DOUBLE_EQ(flows.popularity.at(tower_id),
                     weight * static_cast<double>(truth.gravity_popularity_scale))
        << tower_id;
  }
  EXPECT_DOUBLE_EQ(flows.total_flow(),
                   static_cast<double>(truth.gravity_transitions));
}

TEST(GravityFlows, DegenerateGeometryFails) {
  TowerTable towers;
  towers.add(Tower{"A", 42.0, 1.0, ""});
  towers.add(Tower{"B", 42.0, 1.0, ""});
  std::map<std::string, double> popularity{{"A", 10}, {"B", 20}};
  EXPECT_THROW(
      generate_gravity_flows(towers, popularity, GravityParams{1, 0.5, 0.5, 1}, 0, 1),
      Error);
}

TEST(GravityFlows, NoiseIsSeedDeterministic) {
  TowerTable towers = make_tower_grid(3, 3, 42.4, 1.4, 0.02, 0.025, "G", false);
  auto popularity = log_spread_popularity(towers, 50, 500);
  auto a = generate_gravity_flows(towers, popularity,
                                  GravityParams{1, 0.4, 0.4, 0.8}, 0.1, 9);
  auto b = generate_gravity_flows(towers, popularity,
                                  GravityParams{1, 0.4, 0.4, 0.8}, 0.1, 9);
  auto c = generate_gravity_flows(towers, popularity,
                                  GravityParams{1, 0.4, 0.4, 0.8}, 0.1, 10);
  EXPECT_EQ(a.flows, b.flows);
  EXPECT_NE(a.flows, c.flows);
}

TEST(ScenarioIo, PresetsRoundTripThroughTextFormat) {
  for (const auto& name : scenario_preset_names()) {
    if (name == "scale") continue;  // too large for a text fixture
    auto preset = scenario_preset(name);
    std::ostringstream out;
    write_scenario(out, *preset);
    ScenarioConfig reparsed = parse_scenario(out.str());
    EXPECT_EQ(reparsed.days, preset->days) << name;
    EXPECT_EQ(reparsed.seed, preset->seed) << name;
    EXPECT_EQ(reparsed.base_epoch, preset->base_epoch) << name;
    EXPECT_EQ(reparsed.time_grid_seconds, preset->time_grid_seconds) << name;
    EXPECT_EQ(reparsed.agents, preset->agents) << name;
    EXPECT_TRUE(reparsed.towers == preset->towers) << name;
    EXPECT_EQ(reparsed.gravity == preset->gravity, true) << name;
    // the reparsed scenario generates the same bytes
    EXPECT_EQ(generate_csv(reparsed), generate_csv(*preset)) << name;
  }
}

TEST(ScenarioIo, ParseErrorsCarryLineNumbers) {
  EXPECT_THROW(parse_scenario("days zero\n"), Error);
  EXPECT_THROW(parse_scenario("tower T1 42.5\n"), Error);
  EXPECT_THROW(parse_scenario("agent A\nwindow mon 8-9 T1\n"), Error);  // no end
  EXPECT_THROW(parse_scenario("bogus 1\n"), Error);
  EXPECT_THROW(parse_scenario("popularity T1 10\n"), Error);  // gravity line first
}

TEST(Synthgen, GravityModeRequiresIntegralWeights) {
  ScenarioConfig scenario = make_gravity_grid_scenario();
  auto first = scenario.gravity->popularity.begin();
  first->second += 0.5;
  EXPECT_THROW(generate_cdr(scenario), Error);
}

TEST(ScenarioIo, DaySetGrammar) {
  EXPECT_EQ(detail::parse_day_set("all"), kAllDays);
  EXPECT_EQ(detail::parse_day_set("mon-fri"), kWeekdays);
  EXPECT_EQ(detail::parse_day_set("sat,sun"), kWeekendDays);
  EXPECT_EQ(detail::parse_day_set("mon,wed-thu"), std::uint8_t(0b0001101));
  EXPECT_THROW(detail::parse_day_set("fri-mon"), Error);
  EXPECT_THROW(detail::parse_day_set("noday"), Error);
  EXPECT_EQ(detail::parse_day_set(detail::format_day_set(0b0110011)),
            std::uint8_t(0b0110011));
}

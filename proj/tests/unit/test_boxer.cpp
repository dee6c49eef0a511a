#include "doctest.h"

#include "agentdistill/boxer/boxer.hpp"
#include "agentdistill/core/digest.hpp"
#include "agentdistill/core/temp_dir.hpp"
#include "model_stub.hpp"
#include "paths.hpp"
#include "scripted_model.hpp"

#include <fstream>
#include <set>
#include <sstream>

using namespace agentdistill;
using namespace agentdistill::boxer;
using testing_paths::fault_tool;
using testing_paths::fixture_tool;

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

McpCandidate candidate_from(const std::string& script, const std::string& task = "t1") {
  return McpCandidate{task, 1, script, sha256_hex(script)};
}

std::string python(const std::string& body) { return "```python\n" + body + "```\n"; }

std::string brain_reply() {
  return "Here is the parameterized analyzer.\n" + python(read_file(fixture_tool("brain_region_analyzer.py"))) +
         "```json\n"
         R"({"summary": "Analyze bright areas in a chosen brain region.", "parameters": [)"
         R"({"name": "region", "description": "Region to analyze"},)"
         R"({"name": "analysis_mode", "description": "detect or detail"}]})"
         "\n```\n";
}

std::set<std::string> param_names(const ToolSchema& t) {
  std::set<std::string> out;
  for (const auto& p : t.parameters) out.insert(p.name);
  return out;
}

AbstractedMcp abstracted_named(const std::string& tool, const std::string& summary) {
  AbstractedMcp a;
  a.script_text = "# " + tool + "\n";
  a.origin_digest = sha256_hex(a.script_text);
  a.summary = summary;
  a.tool_schemas = {ToolSchema{tool, summary, {}}};
  return a;
}

std::size_t member_total(const std::vector<McpCluster>& clusters) {
  std::size_t n = 0;
  for (const auto& c : clusters) n += c.members.size();
  return n;
}

// Cluster names with their member digests, for comparing whole clusterings.
std::vector<std::pair<std::string, std::vector<std::string>>> shape(const std::vector<McpCluster>& clusters) {
  std::vector<std::pair<std::string, std::vector<std::string>>> out;
  for (const auto& c : clusters) {
    out.push_back({c.cluster_name, {}});
    for (const auto& m : c.members) out.back().second.push_back(m.origin_digest);
  }
  return out;
}

ConsolidatedMcp consolidated(const std::string& name, const std::string& tool) {
  return ConsolidatedMcp{name, "# " + name + "\n", {ToolSchema{tool, "does " + tool, {}}}, {"d-" + tool}};
}

BoxProvenance fixed_provenance() { return {"log-digest", "2025-01-01T00:00:00Z", "config-digest"}; }

}  // namespace

TEST_CASE("abstraction turns a hard-coded bright-spot script into a region/analysis_mode tool") {
  PromptLibrary prompts;
  ModelStub model([](const auto&, int) { return brain_reply(); });
  const BoxerContext ctx{*model.gateway, "boxer", prompts, {}, 2};
  const auto candidate = candidate_from(read_file(fault_tool("bright_spot.py")));

  const auto out = abstract_mcp(candidate, ctx);
  CHECK(out.origin_digest == candidate.content_digest);
  REQUIRE(out.exposed_parameters.size() == 2);
  CHECK(out.exposed_parameters[0].name == "region");
  CHECK(out.exposed_parameters[1].name == "analysis_mode");
  CHECK_FALSE(out.over_parameter_bound);
  CHECK(out.summary == "Analyze bright areas in a chosen brain region.");
  REQUIRE(out.tool_schemas.size() == 1);
  CHECK(out.tool_schemas[0].name == "analyze_brain_region");
  CHECK(param_names(out.tool_schemas[0]).count("region") == 1);
  CHECK(param_names(out.tool_schemas[0]).count("analysis_mode") == 1);
  CHECK(model.calls() == 1);
  CHECK(model.prompt(0).find(candidate.script_text) != std::string::npos);
}

TEST_CASE("abstraction without a metadata block falls back to the live schema") {
  PromptLibrary prompts;
  ModelStub model([](const auto&, int) { return python(read_file(fixture_tool("brain_region_analyzer.py"))); });
  const BoxerContext ctx{*model.gateway, "boxer", prompts, {}, 2};
  const auto out = abstract_mcp(candidate_from(read_file(fault_tool("bright_spot.py"))), ctx);
  std::vector<std::string> names;
  for (const auto& p : out.exposed_parameters) names.push_back(p.name);
  CHECK(names == std::vector<std::string>{"analysis_mode", "region", "threshold_multiplier"});
  CHECK(out.summary == "Describe bright-area findings for a brain region (synthetic, deterministic).");
}

TEST_CASE("more than three exposed parameters are flagged after one reduction attempt") {
  PromptLibrary prompts;
  const auto wide = python(read_file(fault_tool("wide_params.py")));

  SUBCASE("the model never reduces") {
    ModelStub model([&](const auto&, int) { return wide; });
    const BoxerContext ctx{*model.gateway, "boxer", prompts, {}, 2};
    const auto out = abstract_mcp(candidate_from(read_file(fault_tool("bright_spot.py"))), ctx);
    CHECK(out.over_parameter_bound);
    CHECK(out.exposed_parameters.size() == 4);
    CHECK(model.calls() == 2);
    CHECK(model.prompt(1).find("expose at most three") != std::string::npos);
  }
  SUBCASE("the model reduces on request") {
    ModelStub model([&](const auto&, int i) { return i == 0 ? wide : brain_reply(); });
    const BoxerContext ctx{*model.gateway, "boxer", prompts, {}, 2};
    const auto out = abstract_mcp(candidate_from(read_file(fault_tool("bright_spot.py"))), ctx);
    CHECK_FALSE(out.over_parameter_bound);
    CHECK(out.exposed_parameters.size() == 2);
    CHECK(model.calls() == 2);
  }
  SUBCASE("no retry budget left means the flagged result is kept as is") {
    ModelStub model([&](const auto&, int) { return wide; });
    const BoxerContext ctx{*model.gateway, "boxer", prompts, {}, 0};
    const auto out = abstract_mcp(candidate_from(read_file(fault_tool("bright_spot.py"))), ctx);
    CHECK(out.over_parameter_bound);
    CHECK(model.calls() == 1);
  }
}

TEST_CASE("abstraction retries with feedback and gives up after the budget") {
  PromptLibrary prompts;
  const auto candidate = candidate_from(read_file(fault_tool("bright_spot.py")));

  SUBCASE("prose only") {
    ModelStub model([](const auto&, int) { return std::string("I would rather describe it in words."); });
    const BoxerContext ctx{*model.gateway, "boxer", prompts, {}, 2};
    try {
      abstract_mcp(candidate, ctx);
      FAIL("expected AbstractionFailed");
    } catch (const AbstractionFailed& e) {
      CHECK(e.attempts() == 3);
      CHECK(e.digest() == candidate.content_digest);
    }
    CHECK(model.calls() == 3);
    CHECK(model.prompt(1).find("Your previous reply could not be used") != std::string::npos);
  }
  SUBCASE("a broken rewrite is repaired on the next attempt") {
    ModelStub model([](const auto&, int i) {
      return i == 0 ? python(read_file(fixture_tool("broken.py"))) : brain_reply();
    });
    const BoxerContext ctx{*model.gateway, "boxer", prompts, {}, 1};
    const auto out = abstract_mcp(candidate, ctx);
    CHECK(out.tool_schemas[0].name == "analyze_brain_region");
    CHECK(model.calls() == 2);
    CHECK(model.prompt(1).find("syntax_error") != std::string::npos);
  }
}

TEST_CASE("abstraction replays byte-identically from a recorded cache") {
  PromptLibrary prompts;
  TempDir dir;
  const auto cache = dir.path() / "cache.jsonl";
  const auto candidate = candidate_from(read_file(fault_tool("bright_spot.py")));
  AbstractedMcp recorded;
  {
    llm::LlmGateway gw({llm::Mode::record, cache, std::nullopt, std::nullopt},
                       [](const llm::ChatRequest&) { return llm::ChatResponse{brain_reply(), {}, {}}; });
    recorded = abstract_mcp(candidate, {gw, "boxer", prompts, {}, 2});
  }
  llm::LlmGateway replay({llm::Mode::replay_strict, cache, std::nullopt, std::nullopt});
  const BoxerContext ctx{replay, "boxer", prompts, {}, 2};
  CHECK(abstract_mcp(candidate, ctx) == recorded);
  CHECK(abstract_mcp(candidate, ctx) == recorded);

  const auto other = candidate_from(read_file(fault_tool("left_hemisphere.py")));
  CHECK_THROWS_AS(abstract_mcp(other, ctx), llm::CacheMiss);
}

TEST_CASE("clustering separates image tools from arithmetic tools") {
  PromptLibrary prompts;
  ModelStub model([](const llm::ChatRequest& r, int) { return scripted::reply(r).content; });
  const BoxerContext ctx{*model.gateway, "boxer", prompts, {}, 2};
  const std::vector<AbstractedMcp> items{abstracted_named("analyze_brain_region", "Bright areas in a region."),
                                         abstracted_named("solve_24", "Solve a Game of 24 puzzle."),
                                         abstracted_named("crop_image", "Crop an image to a region.")};
  bool fallback = true;
  const auto clusters = cluster_mcps(items, ctx, &fallback);
  CHECK_FALSE(fallback);
  REQUIRE(clusters.size() == 2);
  CHECK(clusters[0].cluster_name == "image utils");
  CHECK(clusters[0].members.size() == 2);
  CHECK(clusters[0].members[0].origin_digest == items[0].origin_digest);
  CHECK(clusters[0].members[1].origin_digest == items[2].origin_digest);
  CHECK(clusters[1].cluster_name == "numeric analysis");
  CHECK(member_total(clusters) == items.size());
  CHECK(model.calls() == 1);
}

TEST_CASE("clustering edge cases") {
  PromptLibrary prompts;

  SUBCASE("empty input needs no model call") {
    ModelStub model([](const auto&, int) { return std::string(); });
    CHECK(cluster_mcps({}, {*model.gateway, "boxer", prompts, {}, 2}).empty());
    CHECK(model.calls() == 0);
  }
  SUBCASE("a single tool forms a singleton cluster") {
    ModelStub model([](const llm::ChatRequest& r, int) { return scripted::reply(r).content; });
    const auto clusters = cluster_mcps({abstracted_named("solve_24", "Solve.")}, {*model.gateway, "boxer", prompts, {}, 2});
    REQUIRE(clusters.size() == 1);
    CHECK(clusters[0].members.size() == 1);
    CHECK_FALSE(clusters[0].cluster_name.empty());
  }
  SUBCASE("a partial assignment is repaired in one round") {
    ModelStub model([](const auto&, int i) {
      return i == 0 ? std::string("```json\n{\"a\": [0]}\n```") : std::string("```json\n{\"a\": [0], \"b\": [1]}\n```");
    });
    bool fallback = true;
    const auto clusters = cluster_mcps({abstracted_named("x_tool", "x"), abstracted_named("y_tool", "y")},
                                       {*model.gateway, "boxer", prompts, {}, 2}, &fallback);
    CHECK_FALSE(fallback);
    CHECK(clusters.size() == 2);
    CHECK(model.calls() == 2);
    CHECK(model.requests[1].messages.size() == 3);
  }
  SUBCASE("unusable replies fall back to tool-name grouping") {
    ModelStub model([](const auto&, int i) {
      return i == 0 ? std::string("no idea") : std::string("```json\n{\"a\": [0, 0, 1]}\n```");
    });
    const std::vector<AbstractedMcp> items{abstracted_named("detect_bright_spots", "a"),
                                           abstracted_named("solve_24", "b"),
                                           abstracted_named("detectBrightSpot", "c")};
    bool fallback = false;
    const auto clusters = cluster_mcps(items, {*model.gateway, "boxer", prompts, {}, 2}, &fallback);
    CHECK(fallback);
    CHECK(model.calls() == 2);
    CHECK(member_total(clusters) == items.size());
    CHECK(shape(clusters) == shape(fallback_clusters(items)));
  }
}

TEST_CASE("fallback clustering groups by stemmed tool-name tokens") {
  const std::vector<AbstractedMcp> items{abstracted_named("detect_bright_spots", "a"),
                                         abstracted_named("solve_24", "b"),
                                         abstracted_named("detectBrightSpot", "c"),
                                         abstracted_named("solving_24", "d")};
  const auto clusters = fallback_clusters(items);
  REQUIRE(clusters.size() == 2);
  CHECK(clusters[0].members.size() == 2);
  CHECK(clusters[0].members[1].origin_digest == items[2].origin_digest);
  CHECK(clusters[1].members.size() == 2);
  CHECK(clusters[1].members[1].origin_digest == items[3].origin_digest);
  CHECK(clusters[0].cluster_name == "bright");
  CHECK(clusters[1].cluster_name == "solve");
  CHECK(fallback_clusters({}).empty());
}

TEST_CASE("consolidation merges the bright-spot and left-hemisphere tools into one parameterized tool") {
  PromptLibrary prompts;
  ModelStub model([](const auto&, int) { return python(read_file(fixture_tool("brain_region_analyzer.py"))); });
  const BoxerContext ctx{*model.gateway, "boxer", prompts, {}, 2};
  AbstractedMcp bright;
  bright.script_text = read_file(fault_tool("bright_spot.py"));
  bright.origin_digest = sha256_hex(bright.script_text);
  AbstractedMcp left;
  left.script_text = read_file(fault_tool("left_hemisphere.py"));
  left.origin_digest = sha256_hex(left.script_text);

  const auto out = consolidate_cluster({"image utils", {bright, left}}, ctx);
  CHECK(out.cluster_name == "image utils");
  CHECK(out.member_digests == std::vector<std::string>{bright.origin_digest, left.origin_digest});
  REQUIRE(out.tool_schemas.size() == 1);
  CHECK(param_names(out.tool_schemas[0]).count("region") == 1);
  CHECK(param_names(out.tool_schemas[0]).count("analysis_mode") == 1);
  const auto prompt = model.prompt(0);
  CHECK(prompt.find(bright.script_text) != std::string::npos);
  CHECK(prompt.find(left.script_text) != std::string::npos);
  CHECK(prompt.find("\"image utils\"") != std::string::npos);
}

TEST_CASE("consolidating a singleton keeps the member's tools and revalidates") {
  PromptLibrary prompts;
  ModelStub model([](const llm::ChatRequest& r, int) { return scripted::reply(r).content; });
  const BoxerContext ctx{*model.gateway, "boxer", prompts, {}, 2};
  AbstractedMcp solver;
  solver.script_text = scripted::script("solver");
  solver.origin_digest = sha256_hex(solver.script_text);
  solver.tool_schemas = {ToolSchema{"solve_24", "", {}}};
  const auto out = consolidate_cluster({"numeric analysis", {solver}}, ctx);
  REQUIRE(out.tool_schemas.size() == 1);
  CHECK(out.tool_schemas[0].name == "solve_24");
  CHECK(param_names(out.tool_schemas[0]) == std::set<std::string>{"numbers"});
}

TEST_CASE("consolidation failure after the retry budget") {
  PromptLibrary prompts;
  ModelStub model([](const auto&, int) { return python(read_file(fixture_tool("broken.py"))); });
  const BoxerContext ctx{*model.gateway, "boxer", prompts, {}, 1};
  AbstractedMcp a = abstracted_named("solve_24", "x");
  try {
    consolidate_cluster({"numeric analysis", {a}}, ctx);
    FAIL("expected ConsolidationFailed");
  } catch (const ConsolidationFailed& e) {
    CHECK(e.cluster_name() == "numeric analysis");
    CHECK(e.attempts() == 2);
    CHECK(e.last_error().find("syntax_error") != std::string::npos);
  }
  CHECK(model.calls() == 2);
  CHECK_THROWS_AS(consolidate_cluster({"empty", {}}, ctx), ConsolidationFailed);
}

TEST_CASE("slugify lowercases and collapses separators") {
  CHECK(slugify("image utils") == "image-utils");
  CHECK(slugify("  Numeric -- Analysis!! ") == "numeric-analysis");
  CHECK(slugify("image utils-2") == "image-utils-2");
  CHECK(slugify("***") == "tool");
}

TEST_CASE("assembly disambiguates names, orders entries and round-trips") {
  TempDir dir;
  const auto root = dir.path() / "box";
  std::filesystem::create_directories(root / "tools");
  std::ofstream(root / "tools" / "stale.tool") << "# left over\n";

  const auto box = assemble_box({consolidated("numeric analysis", "solve_24"), consolidated("image utils", "crop"),
                                 consolidated("image utils", "detect")},
                                fixed_provenance(), root);
  REQUIRE(box.entries.size() == 3);
  CHECK(box.entries[0].cluster_name == "image utils");
  CHECK(box.entries[0].tool_script_path == "tools/image-utils.tool");
  CHECK(box.entries[1].cluster_name == "image utils-2");
  CHECK(box.entries[1].tool_script_path == "tools/image-utils-2.tool");
  CHECK(box.entries[1].tool_schemas[0].name == "detect");
  CHECK(box.entries[2].cluster_name == "numeric analysis");
  CHECK(read_file(root / "tools" / "numeric-analysis.tool") == "# numeric analysis\n");
  CHECK_FALSE(std::filesystem::exists(root / "tools" / "stale.tool"));
  CHECK(box.provenance == fixed_provenance());
  CHECK(box.schema_version == "1");

  CHECK(load_box(root) == box);
  const std::string first = read_file(root / "box.json");
  save_box(load_box(root), root);
  CHECK(read_file(root / "box.json") == first);
}

TEST_CASE("box sizes follow the number of consolidated tools") {
  TempDir dir;
  CHECK(assemble_box({consolidated("numeric analysis", "solve_24")}, fixed_provenance(), dir.path() / "one")
            .entries.size() == 1);
  std::vector<ConsolidatedMcp> many;
  for (int i = 0; i < 13; ++i) many.push_back(consolidated("cluster " + std::to_string(i), "t" + std::to_string(i)));
  const auto box = assemble_box(many, fixed_provenance(), dir.path() / "thirteen");
  CHECK(box.entries.size() == 13);
  CHECK(load_box(dir.path() / "thirteen").entries.size() == 13);
}

TEST_CASE("loading rejects unknown versions, missing tools and malformed manifests") {
  TempDir dir;
  const auto root = dir.path() / "box";
  assemble_box({consolidated("numeric analysis", "solve_24")}, fixed_provenance(), root);

  SUBCASE("schema version 99") {
    auto j = json::parse(read_file(root / "box.json"));
    j["schema_version"] = "99";
    std::ofstream(root / "box.json") << j.dump(2);
    try {
      load_box(root);
      FAIL("expected UnsupportedSchema");
    } catch (const UnsupportedSchema& e) {
      CHECK(e.found() == "99");
    }
  }
  SUBCASE("deleted tool file") {
    std::filesystem::remove(root / "tools" / "numeric-analysis.tool");
    try {
      load_box(root);
      FAIL("expected MissingTool");
    } catch (const MissingTool& e) {
      CHECK(e.path().find("numeric-analysis.tool") != std::string::npos);
    }
  }
  SUBCASE("broken JSON") {
    std::ofstream(root / "box.json") << "{\n  \"schema_version\": \"1\",\n  oops\n}\n";
    try {
      load_box(root);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line_number() == 3);
    }
  }
  SUBCASE("missing manifest") { CHECK_THROWS_AS(load_box(dir.path() / "nowhere"), IoError); }
}

TEST_CASE("distilling a log without successful trajectories yields an empty, valid box") {
  PromptLibrary prompts;
  ModelStub model([](const auto&, int) { return std::string(); });
  const BoxerContext ctx{*model.gateway, "boxer", prompts, {}, 2};
  TempDir dir;
  const std::vector<TaskExample> dataset{{"q1", "question", std::nullopt, "yes", TaskKind::vqa}};
  const std::vector<Trajectory> log{{"q1", {{1, "", "<mcp>\nprint(1)\n</mcp>", ""}}, "no", AgentRole::teacher}};
  const auto result = run_distill(log, dataset, ctx, {dir.path() / "box", "2025-01-01T00:00:00Z", "cfg"});
  CHECK(result.box.entries.empty());
  CHECK(model.calls() == 0);
  const auto loaded = load_box(dir.path() / "box");
  CHECK(loaded == result.box);
  CHECK(loaded.provenance.created_at == "2025-01-01T00:00:00Z");
  CHECK(result.report["counts"]["successful_trajectories"] == 0);
  CHECK(result.report["counts"]["box_entries"] == 0);
  CHECK(std::filesystem::is_regular_file(dir.path() / "box" / "report.json"));
}

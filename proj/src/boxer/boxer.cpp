#include "agentdistill/boxer/boxer.hpp"

#include "agentdistill/core/digest.hpp"
#include "agentdistill/core/log.hpp"
#include "agentdistill/core/parallel.hpp"
#include "agentdistill/core/text_blocks.hpp"
#include "agentdistill/extraction/extraction.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <variant>

namespace agentdistill::boxer {

namespace {

std::string ask(const BoxerContext& ctx, const std::vector<llm::ChatMessage>& messages) {
  llm::ChatRequest request;
  request.model_id = ctx.model_id;
  request.messages = messages;
  return ctx.gateway.complete(request).content;
}

std::string with_feedback(const std::string& prompt, const std::string& feedback) {
  if (feedback.empty()) return prompt;
  return prompt + "\n\nYour previous reply could not be used: " + feedback +
         "\nReply again, following the format above.";
}

bool is_python_info(const std::string& info) {
  const std::string lower = to_lower(info);
  return lower == "python" || lower == "py" || lower == "python3";
}

// The script is the first python-tagged block, else the first block carrying
// a tool decorator.
std::optional<std::string> script_block(const std::vector<TextBlock>& blocks) {
  for (const auto& b : blocks)
    if (!b.tagged_mcp && is_python_info(b.info)) return b.body;
  for (const auto& b : blocks)
    if (b.body.find("@mcp.tool(") != std::string::npos) return b.body;
  return std::nullopt;
}

std::optional<json> json_block(const std::vector<TextBlock>& blocks) {
  for (const auto& b : blocks) {
    if (to_lower(b.info) != "json") continue;
    try {
      return json::parse(b.body);
    } catch (const json::parse_error&) {
      return std::nullopt;
    }
  }
  return std::nullopt;
}

std::string validation_feedback(const extraction::ValidationReport& r) {
  return "the script failed validation: " + extraction::summarize(r);
}

extraction::ValidationReport validate_script(const std::string& script, const mcp::SandboxConfig& sandbox) {
  return extraction::validate_candidate({"", 0, script, content_digest(script)}, sandbox);
}

std::string tool_names(const std::vector<ToolSchema>& tools) {
  std::string out;
  for (const auto& t : tools) out += (out.empty() ? "" : ", ") + t.name;
  return out;
}

struct NameToken {
  std::string stem;  // grouping key
  std::string word;  // lowercased surface form, used for labels
};

std::vector<NameToken> name_tokens(const std::string& name) {
  std::vector<NameToken> tokens;
  std::string current;
  auto flush = [&] {
    if (current.empty()) return;
    const std::string word = to_lower(current);
    std::string t = word;
    current.clear();
    auto ends_with = [&](std::string_view s) { return t.size() >= s.size() && t.compare(t.size() - s.size(), s.size(), s) == 0; };
    if (ends_with("ing") && t.size() > 5) t.resize(t.size() - 3);
    else if (ends_with("ed") && t.size() > 4) t.resize(t.size() - 2);
    else if (ends_with("es") && t.size() > 4) t.resize(t.size() - 2);
    else if (ends_with("s") && !ends_with("ss") && t.size() > 3) t.resize(t.size() - 1);
    if (ends_with("e") && t.size() > 3) t.pop_back();
    tokens.push_back({std::move(t), word});
  };
  for (std::size_t i = 0; i < name.size(); ++i) {
    const unsigned char c = static_cast<unsigned char>(name[i]);
    if (!std::isalnum(c)) {
      flush();
      continue;
    }
    if (std::isupper(c) && !current.empty() && std::islower(static_cast<unsigned char>(current.back()))) flush();
    current.push_back(static_cast<char>(c));
  }
  flush();
  return tokens;
}

struct Assignment {
  std::vector<std::pair<std::string, std::vector<std::size_t>>> groups;
  std::string problem;  // empty when usable
};

Assignment parse_assignment(const std::string& content, std::size_t n) {
  Assignment a;
  std::optional<json> parsed = json_block(scan_blocks(content));
  if (!parsed) {
    try {
      parsed = json::parse(trim(content));
    } catch (const json::parse_error&) {
      a.problem = "no JSON object found";
      return a;
    }
  }
  if (!parsed->is_object() || parsed->empty()) {
    a.problem = "expected a non-empty JSON object mapping labels to tool numbers";
    return a;
  }
  std::vector<int> seen(n, 0);
  for (const auto& [label, members] : parsed->items()) {
    const std::string name = trim(label);
    if (name.empty()) {
      a.problem = "empty group label";
      return a;
    }
    if (!members.is_array() || members.empty()) {
      a.problem = "group '" + name + "' has no tool numbers";
      return a;
    }
    std::vector<std::size_t> idx;
    for (const auto& m : members) {
      if (!m.is_number_integer() || m.get<std::int64_t>() < 0 || m.get<std::size_t>() >= n) {
        a.problem = "group '" + name + "' lists " + m.dump() + ", which is not a tool number";
        return a;
      }
      idx.push_back(m.get<std::size_t>());
      ++seen[idx.back()];
    }
    std::sort(idx.begin(), idx.end());
    a.groups.emplace_back(name, std::move(idx));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (seen[i] != 1) {
      a.problem = "tool " + std::to_string(i) + (seen[i] == 0 ? " is not assigned" : " is assigned more than once");
      return a;
    }
  }
  std::sort(a.groups.begin(), a.groups.end(), [](const auto& x, const auto& y) { return x.second[0] < y.second[0]; });
  return a;
}

std::string write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write to " + path.string() + " failed");
  return path.string();
}

}  // namespace

AbstractedMcp abstract_mcp(const McpCandidate& candidate, const BoxerContext& ctx) {
  const std::string prompt = render_template(ctx.prompts.load("abstract"), {{"script", candidate.script_text}});
  const int max_attempts = 1 + std::max(0, ctx.retry_budget);
  std::optional<AbstractedMcp> flagged;
  std::string feedback;
  int attempt = 0;
  for (attempt = 1; attempt <= max_attempts; ++attempt) {
    const std::string reply = ask(ctx, {{llm::Role::user, with_feedback(prompt, feedback), std::nullopt}});
    const auto blocks = scan_blocks(reply);
    const auto script = script_block(blocks);
    if (!script) {
      feedback = "no ```python block with the rewritten script was found";
      continue;
    }
    const auto report = validate_script(*script, ctx.sandbox);
    if (report.outcome != extraction::Outcome::valid) {
      feedback = validation_feedback(report);
      continue;
    }

    AbstractedMcp out;
    out.origin_digest = candidate.content_digest;
    out.script_text = *script;
    out.tool_schemas = report.tools;
    const auto meta = json_block(blocks);
    if (meta && meta->is_object()) {
      out.summary = trim(meta->value("summary", std::string()));
      if (meta->contains("parameters") && (*meta)["parameters"].is_array()) {
        for (const auto& p : (*meta)["parameters"]) {
          if (p.is_object() && p.contains("name") && p["name"].is_string())
            out.exposed_parameters.push_back({p["name"].get<std::string>(), p.value("description", std::string())});
          else if (p.is_string())
            out.exposed_parameters.push_back({p.get<std::string>(), ""});
        }
      }
    } else {
      std::set<std::string> names;
      for (const auto& tool : out.tool_schemas)
        for (const auto& p : tool.parameters)
          if (names.insert(p.name).second) out.exposed_parameters.push_back({p.name, p.description});
    }
    if (out.summary.empty() && !out.tool_schemas.empty()) {
      const auto& d = out.tool_schemas.front().description;
      out.summary = trim(d.substr(0, d.find('\n')));
    }
    out.over_parameter_bound = out.exposed_parameters.size() > kParameterBound;
    if (!out.over_parameter_bound) return out;

    // Over the bound: keep this result, and spend one attempt asking for fewer.
    const bool first_flag = !flagged;
    flagged = std::move(out);
    if (!first_flag || attempt == max_attempts) break;
    feedback = "the script exposes " + std::to_string(flagged->exposed_parameters.size()) +
               " parameters; expose at most three and give the rest defaults";
  }
  if (flagged) {
    logger().warn("abstracted tool {} exposes {} parameters", flagged->origin_digest.substr(0, 12),
                  flagged->exposed_parameters.size());
    return *flagged;
  }
  throw AbstractionFailed(candidate.content_digest, max_attempts, feedback);
}

std::vector<McpCluster> fallback_clusters(const std::vector<AbstractedMcp>& abstracted) {
  std::vector<std::string> keys;
  std::vector<std::vector<NameToken>> tokens_of;
  for (const auto& a : abstracted) {
    std::vector<NameToken> tokens;
    for (const auto& t : a.tool_schemas) {
      auto more = name_tokens(t.name);
      tokens.insert(tokens.end(), more.begin(), more.end());
    }
    std::vector<std::string> stems;
    for (const auto& t : tokens) stems.push_back(t.stem);
    std::sort(stems.begin(), stems.end());
    std::string key;
    for (const auto& t : stems) key += t + " ";
    keys.push_back(key);
    tokens_of.push_back(std::move(tokens));
  }
  std::vector<McpCluster> clusters;
  std::map<std::string, std::size_t> cluster_of;
  std::vector<std::map<std::string, int>> counts;
  std::vector<std::map<std::string, std::string>> word_of;  // stem -> first surface form
  for (std::size_t i = 0; i < abstracted.size(); ++i) {
    auto [it, fresh] = cluster_of.emplace(keys[i], clusters.size());
    if (fresh) {
      clusters.push_back({"", {}});
      counts.emplace_back();
      word_of.emplace_back();
    }
    clusters[it->second].members.push_back(abstracted[i]);
    for (const auto& t : tokens_of[i]) {
      ++counts[it->second][t.stem];
      word_of[it->second].emplace(t.stem, t.word);
    }
  }
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    std::string best = "tools";
    int best_count = 0;
    for (const auto& [stem, n] : counts[c]) {
      // Ties go to the alphabetically first stem; words beat bare numbers.
      const bool has_alpha = std::any_of(stem.begin(), stem.end(), [](unsigned char ch) { return std::isalpha(ch); });
      const int score = 2 * n + (has_alpha ? 1 : 0);
      if (score > best_count) {
        best = word_of[c][stem];
        best_count = score;
      }
    }
    clusters[c].cluster_name = best;
  }
  return clusters;
}

std::vector<McpCluster> cluster_mcps(const std::vector<AbstractedMcp>& abstracted, const BoxerContext& ctx,
                                     bool* used_fallback) {
  if (used_fallback) *used_fallback = false;
  if (abstracted.empty()) return {};

  std::string items;
  for (std::size_t i = 0; i < abstracted.size(); ++i) {
    const auto& a = abstracted[i];
    items += "### Tool " + std::to_string(i) + "\nSummary: " + a.summary + "\nTool names: " +
             tool_names(a.tool_schemas) + "\n```python\n" + a.script_text + "```\n\n";
  }
  const std::string prompt = render_template(
      ctx.prompts.load("cluster"), {{"count", std::to_string(abstracted.size())}, {"items", items}});

  std::vector<llm::ChatMessage> messages{{llm::Role::user, prompt, std::nullopt}};
  Assignment assignment;
  for (int round = 0; round < 2; ++round) {
    const std::string reply = ask(ctx, messages);
    assignment = parse_assignment(reply, abstracted.size());
    if (assignment.problem.empty()) break;
    logger().info("clustering reply unusable: {}", assignment.problem);
    messages.push_back({llm::Role::assistant, reply, std::nullopt});
    messages.push_back({llm::Role::user,
                        "That reply was not a usable grouping: " + assignment.problem +
                            ". Reply again with one ```json block assigning every tool number from 0 to " +
                            std::to_string(abstracted.size() - 1) + " to exactly one group.",
                        std::nullopt});
  }
  if (!assignment.problem.empty()) {
    logger().warn("clustering fell back to tool-name grouping: {}", assignment.problem);
    if (used_fallback) *used_fallback = true;
    return fallback_clusters(abstracted);
  }
  std::vector<McpCluster> clusters;
  for (const auto& [name, idx] : assignment.groups) {
    McpCluster c{name, {}};
    for (auto i : idx) c.members.push_back(abstracted[i]);
    clusters.push_back(std::move(c));
  }
  return clusters;
}

ConsolidatedMcp consolidate_cluster(const McpCluster& cluster, const BoxerContext& ctx) {
  if (cluster.members.empty()) throw ConsolidationFailed(cluster.cluster_name, 0, "cluster has no members");
  std::string members;
  for (std::size_t i = 0; i < cluster.members.size(); ++i) {
    const auto& m = cluster.members[i];
    members += "### Member " + std::to_string(i + 1) + "\nSummary: " + m.summary + "\n```python\n" + m.script_text +
               "```\n\n";
  }
  const std::string prompt = render_template(ctx.prompts.load("consolidate"),
                                             {{"cluster_name", cluster.cluster_name}, {"members", members}});
  const int max_attempts = 1 + std::max(0, ctx.retry_budget);
  std::string feedback;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    const std::string reply = ask(ctx, {{llm::Role::user, with_feedback(prompt, feedback), std::nullopt}});
    const auto script = script_block(scan_blocks(reply));
    if (!script) {
      feedback = "no ```python block with the merged script was found";
      continue;
    }
    const auto report = validate_script(*script, ctx.sandbox);
    if (report.outcome != extraction::Outcome::valid) {
      feedback = validation_feedback(report);
      continue;
    }
    ConsolidatedMcp out{cluster.cluster_name, *script, report.tools, {}};
    for (const auto& m : cluster.members) out.member_digests.push_back(m.origin_digest);
    return out;
  }
  throw ConsolidationFailed(cluster.cluster_name, max_attempts, feedback);
}

std::string slugify(std::string_view name) {
  std::string out;
  for (char ch : name) {
    const unsigned char c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) && c < 0x80) {
      out.push_back(static_cast<char>(std::tolower(c)));
    } else if (!out.empty() && out.back() != '-') {
      out.push_back('-');
    }
  }
  while (!out.empty() && out.back() == '-') out.pop_back();
  return out.empty() ? "tool" : out;
}

McpBox assemble_box(const std::vector<ConsolidatedMcp>& consolidated, const BoxProvenance& provenance,
                    const std::filesystem::path& box_root) {
  namespace fs = std::filesystem;
  const fs::path tools_dir = box_root / "tools";
  std::error_code ec;
  fs::create_directories(tools_dir, ec);
  if (ec) throw IoError("cannot create " + tools_dir.string() + ": " + ec.message());
  // Stale tool files from an earlier run would break byte-identical output.
  for (const auto& entry : fs::directory_iterator(tools_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".tool") fs::remove(entry.path());
  }

  McpBox box;
  box.provenance = provenance;
  std::set<std::string> names;
  std::set<std::string> slugs;
  for (const auto& c : consolidated) {
    std::string name = trim(c.cluster_name);
    if (name.empty()) name = "tools";
    if (names.count(name)) {
      int n = 2;
      while (names.count(name + "-" + std::to_string(n))) ++n;
      name += "-" + std::to_string(n);
    }
    names.insert(name);
    std::string slug = slugify(name);
    if (slugs.count(slug)) {
      int n = 2;
      while (slugs.count(slug + "-" + std::to_string(n))) ++n;
      slug += "-" + std::to_string(n);
    }
    slugs.insert(slug);
    const std::string rel = "tools/" + slug + ".tool";
    write_file(box_root / rel, c.script_text);
    box.entries.push_back({rel, name, c.tool_schemas});
  }
  std::sort(box.entries.begin(), box.entries.end(),
            [](const BoxEntry& a, const BoxEntry& b) { return a.cluster_name < b.cluster_name; });
  save_box(box, box_root);
  return box;
}

void save_box(const McpBox& box, const std::filesystem::path& box_root) {
  std::error_code ec;
  std::filesystem::create_directories(box_root, ec);
  if (ec) throw IoError("cannot create " + box_root.string() + ": " + ec.message());
  write_file(box_root / "box.json", json(box).dump(2) + "\n");
}

McpBox box_from_json(const json& j) {
  if (!j.is_object()) throw ParseError(0, "box manifest is not a JSON object");
  const auto version = j.find("schema_version");
  if (version == j.end() || !version->is_string()) throw ParseError(0, "box manifest lacks schema_version");
  if (version->get<std::string>() != kBoxSchemaVersion) throw UnsupportedSchema(version->get<std::string>());
  McpBox box;
  try {
    for (const auto& e : j.at("entries")) {
      box.entries.push_back({e.at("tool_script_path").get<std::string>(), e.at("cluster_name").get<std::string>(),
                             e.at("tool_schemas").get<std::vector<ToolSchema>>()});
    }
    const auto& p = j.at("provenance");
    box.provenance = {p.at("source_log_digest").get<std::string>(), p.at("created_at").get<std::string>(),
                      p.at("pipeline_config_digest").get<std::string>()};
  } catch (const json::exception& e) {
    throw ParseError(0, std::string("box manifest: ") + e.what());
  }
  return box;
}

McpBox load_box(const std::filesystem::path& box_root) {
  const auto manifest = box_root / "box.json";
  std::ifstream in(manifest);
  if (!in) throw IoError("cannot read " + manifest.string());
  std::stringstream text;
  text << in.rdbuf();
  json j;
  try {
    j = json::parse(text.str());
  } catch (const json::parse_error& e) {
    const std::string s = text.str();
    const auto upto = std::min<std::size_t>(e.byte, s.size());
    const auto line = 1 + static_cast<std::size_t>(std::count(s.begin(), s.begin() + upto, '\n'));
    throw ParseError(line, manifest.string() + ": " + e.what());
  }
  McpBox box = box_from_json(j);
  for (const auto& entry : box.entries) {
    const auto path = box_root / entry.tool_script_path;
    if (!std::filesystem::is_regular_file(path)) throw MissingTool(path.string());
  }
  return box;
}

DistillResult run_distill(const std::vector<Trajectory>& trajectories, const std::vector<TaskExample>& dataset,
                          const BoxerContext& ctx, const DistillOptions& options) {
  const auto successful = extraction::filter_successful(trajectories, dataset);
  const auto pool = extraction::build_pool(trajectories, dataset, ctx.sandbox);

  using Abstraction = std::variant<AbstractedMcp, AbstractionFailed>;
  const auto abstractions = parallel_map(pool.candidates.size(), ctx.sandbox.max_parallel, [&](std::size_t i) {
    try {
      return Abstraction(abstract_mcp(pool.candidates[i], ctx));
    } catch (const AbstractionFailed& e) {
      return Abstraction(e);
    }
  });
  std::vector<AbstractedMcp> abstracted;
  json abstraction_failures = json::array();
  json flagged = json::array();
  for (const auto& a : abstractions) {
    if (const auto* ok = std::get_if<AbstractedMcp>(&a)) {
      if (ok->over_parameter_bound)
        flagged.push_back({{"origin_digest", ok->origin_digest}, {"parameters", ok->exposed_parameters.size()}});
      abstracted.push_back(*ok);
    } else {
      const auto& f = std::get<AbstractionFailed>(a);
      logger().warn("{}", f.what());
      abstraction_failures.push_back(
          {{"origin_digest", f.digest()}, {"attempts", f.attempts()}, {"last_error", f.last_error()}});
    }
  }

  bool used_fallback = false;
  const auto clusters = cluster_mcps(abstracted, ctx, &used_fallback);

  using Consolidation = std::variant<ConsolidatedMcp, ConsolidationFailed>;
  const auto consolidations = parallel_map(clusters.size(), ctx.sandbox.max_parallel, [&](std::size_t i) {
    try {
      return Consolidation(consolidate_cluster(clusters[i], ctx));
    } catch (const ConsolidationFailed& e) {
      return Consolidation(e);
    }
  });
  std::vector<ConsolidatedMcp> consolidated;
  json consolidation_failures = json::array();
  for (const auto& c : consolidations) {
    if (const auto* ok = std::get_if<ConsolidatedMcp>(&c)) {
      consolidated.push_back(*ok);
    } else {
      const auto& f = std::get<ConsolidationFailed>(c);
      logger().warn("{}", f.what());
      consolidation_failures.push_back(
          {{"cluster_name", f.cluster_name()}, {"attempts", f.attempts()}, {"last_error", f.last_error()}});
    }
  }

  BoxProvenance provenance{pool.source_log_digest,
                           options.created_at.empty() ? utc_timestamp_now() : options.created_at,
                           options.pipeline_config_digest};
  DistillResult result;
  result.box = assemble_box(consolidated, provenance, options.box_root);

  json rejected = json::array();
  for (const auto& r : pool.rejected) rejected.push_back(extraction::to_json(r));
  json duplicates = json::array();
  for (const auto& d : pool.duplicates) duplicates.push_back(extraction::to_json(d));
  json cluster_list = json::array();
  for (const auto& c : clusters) {
    json members = json::array();
    for (const auto& m : c.members) members.push_back(m.origin_digest);
    cluster_list.push_back({{"cluster_name", c.cluster_name}, {"members", members}});
  }
  json pool_digests = json::array();
  for (const auto& c : pool.candidates)
    pool_digests.push_back({{"content_digest", c.content_digest},
                            {"source_task_id", c.source_task_id},
                            {"step_index", c.step_index}});

  result.report = {
      {"source_log_digest", pool.source_log_digest},
      {"counts",
       {{"trajectories", trajectories.size()},
        {"successful_trajectories", successful.size()},
        {"extracted", pool.extracted},
        {"pool", pool.candidates.size()},
        {"rejected", pool.rejected.size()},
        {"duplicates", pool.duplicates.size()},
        {"abstracted", abstracted.size()},
        {"abstraction_failures", abstraction_failures.size()},
        {"over_parameter_bound", flagged.size()},
        {"clusters", clusters.size()},
        {"consolidation_failures", consolidation_failures.size()},
        {"box_entries", result.box.entries.size()}}},
      {"pool", pool_digests},
      {"rejected", rejected},
      {"duplicates", duplicates},
      {"abstraction_failures", abstraction_failures},
      {"over_parameter_bound", flagged},
      {"clustering", {{"fallback_used", used_fallback}, {"clusters", cluster_list}}},
      {"consolidation_failures", consolidation_failures},
  };
  write_file(options.box_root / "report.json", result.report.dump(2) + "\n");
  return result;
}

}  // namespace agentdistill::boxer

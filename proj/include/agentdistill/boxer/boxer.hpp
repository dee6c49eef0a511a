#pragma once

#include "agentdistill/core/errors.hpp"
#include "agentdistill/core/prompts.hpp"
#include "agentdistill/core/types.hpp"
#include "agentdistill/llm/gateway.hpp"
#include "agentdistill/mcp/sandbox.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace agentdistill::boxer {

inline constexpr std::size_t kParameterBound = 3;

struct ExposedParameter {
  std::string name;
  std::string description;

  bool operator==(const ExposedParameter&) const = default;
};

struct AbstractedMcp {
  std::string origin_digest;
  std::string script_text;
  std::vector<ExposedParameter> exposed_parameters;
  std::string summary;
  std::vector<ToolSchema> tool_schemas;  // reported by the live server
  bool over_parameter_bound = false;

  bool operator==(const AbstractedMcp&) const = default;
};

struct McpCluster {
  std::string cluster_name;
  std::vector<AbstractedMcp> members;
};

struct ConsolidatedMcp {
  std::string cluster_name;
  std::string script_text;
  std::vector<ToolSchema> tool_schemas;
  std::vector<std::string> member_digests;

  bool operator==(const ConsolidatedMcp&) const = default;
};

class AbstractionFailed : public Error {
 public:
  AbstractionFailed(std::string digest, int attempts, std::string last_error)
      : Error("abstraction of " + digest.substr(0, 12) + " failed after " + std::to_string(attempts) +
              " attempt(s): " + last_error),
        digest_(std::move(digest)),
        attempts_(attempts),
        last_error_(std::move(last_error)) {}
  const std::string& digest() const { return digest_; }
  int attempts() const { return attempts_; }
  const std::string& last_error() const { return last_error_; }

 private:
  std::string digest_;
  int attempts_;
  std::string last_error_;
};

class ConsolidationFailed : public Error {
 public:
  ConsolidationFailed(std::string cluster_name, int attempts, std::string last_error)
      : Error("consolidation of '" + cluster_name + "' failed after " + std::to_string(attempts) +
              " attempt(s): " + last_error),
        cluster_name_(std::move(cluster_name)),
        attempts_(attempts),
        last_error_(std::move(last_error)) {}
  const std::string& cluster_name() const { return cluster_name_; }
  int attempts() const { return attempts_; }
  const std::string& last_error() const { return last_error_; }

 private:
  std::string cluster_name_;
  int attempts_;
  std::string last_error_;
};

class UnsupportedSchema : public Error {
 public:
  explicit UnsupportedSchema(std::string found)
      : Error("unsupported box schema_version '" + found + "'"), found_(std::move(found)) {}
  const std::string& found() const { return found_; }

 private:
  std::string found_;
};

class MissingTool : public Error {
 public:
  explicit MissingTool(std::string path) : Error("box references missing tool file " + path), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// Everything the model-driven stages need. `retry_budget` extra attempts are
// allowed after the first one fails.
struct BoxerContext {
  llm::LlmGateway& gateway;
  std::string model_id;
  const PromptLibrary& prompts;
  mcp::SandboxConfig sandbox;
  int retry_budget = 2;
};

AbstractedMcp abstract_mcp(const McpCandidate& candidate, const BoxerContext& ctx);

// Total partition of the input. Falls back to fallback_clusters when the
// model's assignment is still unusable after one repair round.
std::vector<McpCluster> cluster_mcps(const std::vector<AbstractedMcp>& abstracted, const BoxerContext& ctx,
                                     bool* used_fallback = nullptr);

// Groups by the multiset of stemmed tokens in each item's tool names; the
// label is the group's most frequent token.
std::vector<McpCluster> fallback_clusters(const std::vector<AbstractedMcp>& abstracted);

ConsolidatedMcp consolidate_cluster(const McpCluster& cluster, const BoxerContext& ctx);

// lowercase, runs of non-alphanumerics become a single '-'
std::string slugify(std::string_view name);

// Writes tools/<slug>.tool per item plus box.json. Repeated cluster names get
// a "-2", "-3", ... suffix. Entries are ordered by cluster name.
McpBox assemble_box(const std::vector<ConsolidatedMcp>& consolidated, const BoxProvenance& provenance,
                    const std::filesystem::path& box_root);

void save_box(const McpBox& box, const std::filesystem::path& box_root);
McpBox load_box(const std::filesystem::path& box_root);
McpBox box_from_json(const json& j);

struct DistillOptions {
  std::filesystem::path box_root;
  std::string created_at;  // empty: current time
  std::string pipeline_config_digest;
};

struct DistillResult {
  McpBox box;
  json report;
};

// build_pool -> abstract -> cluster -> consolidate -> assemble. Failed items
// are dropped and listed in the report (also written as report.json).
DistillResult run_distill(const std::vector<Trajectory>& trajectories, const std::vector<TaskExample>& dataset,
                          const BoxerContext& ctx, const DistillOptions& options);

}  // namespace agentdistill::boxer

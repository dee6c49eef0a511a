#pragma once

#include "agentdistill/core/types.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace agentdistill::agents {

struct ToolInvocation {
  std::string tool_name;
  json arguments = json::object();
  std::string raw_span;  // the fenced block the call was parsed from
};

// Finds the first ```tool_call fenced block (inline or multi-line) whose body
// is a JSON object {"tool": <non-empty string>, "arguments": <object>}.
// Malformed blocks are logged and skipped; no valid block yields nullopt.
std::optional<ToolInvocation> parse_tool_invocation(std::string_view model_text);

}  // namespace agentdistill::agents

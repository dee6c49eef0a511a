#include "agentdistill/agents/tool_call.hpp"

#include "agentdistill/core/log.hpp"
#include "agentdistill/core/text_blocks.hpp"

namespace agentdistill::agents {

std::optional<ToolInvocation> parse_tool_invocation(std::string_view model_text) {
  static constexpr std::string_view kOpen = "```tool_call";
  std::size_t pos = 0;
  while ((pos = model_text.find(kOpen, pos)) != std::string_view::npos) {
    const std::size_t body_start = pos + kOpen.size();
    if (body_start < model_text.size()) {
      const char next = model_text[body_start];
      if (next != '{' && next != ' ' && next != '\t' && next != '\n' && next != '\r') {
        pos = body_start;
        continue;
      }
    }
    const std::size_t close = model_text.find("```", body_start);
    if (close == std::string_view::npos) {
      logger().info("tool_call block without closing fence ignored");
      return std::nullopt;
    }
    const std::string body = trim(model_text.substr(body_start, close - body_start));
    const std::string raw(model_text.substr(pos, close + 3 - pos));
    pos = close + 3;
    json parsed;
    try {
      parsed = json::parse(body);
    } catch (const json::parse_error& e) {
      logger().info("malformed tool_call block treated as reasoning: {}", e.what());
      continue;
    }
    if (!parsed.is_object() || !parsed.contains("tool") || !parsed["tool"].is_string() ||
        parsed["tool"].get<std::string>().empty()) {
      logger().info("tool_call block without a tool name treated as reasoning");
      continue;
    }
    json arguments = parsed.value("arguments", json::object());
    if (arguments.is_null()) arguments = json::object();
    if (!arguments.is_object()) {
      logger().info("tool_call block with non-object arguments treated as reasoning");
      continue;
    }
    return ToolInvocation{parsed["tool"].get<std::string>(), std::move(arguments), raw};
  }
  return std::nullopt;
}

}  // namespace agentdistill::agents

#include "scripted_model.hpp"

#include "agentdistill/core/text_blocks.hpp"

#include <fstream>
#include <map>
#include <regex>
#include <sstream>

namespace scripted {

using agentdistill::json;
using agentdistill::llm::ChatRequest;
using agentdistill::llm::ChatResponse;
using agentdistill::llm::FinishReason;
using agentdistill::llm::Role;

namespace {

std::string fenced(const std::string& info, const std::string& body) {
  return "```" + info + "\n" + body + (body.empty() || body.back() == '\n' ? "" : "\n") + "```\n";
}

std::string tool_call(const std::string& tool, const json& arguments) {
  return fenced("tool_call", json{{"tool", tool}, {"arguments", arguments}}.dump());
}

std::string first_user(const ChatRequest& r) {
  for (const auto& m : r.messages)
    if (m.role == Role::user) return m.content;
  return {};
}

std::string system_text(const ChatRequest& r) {
  for (const auto& m : r.messages)
    if (m.role == Role::system) return m.content;
  return {};
}

int assistant_turns(const ChatRequest& r) {
  int n = 0;
  for (const auto& m : r.messages) n += m.role == Role::assistant ? 1 : 0;
  return n;
}

std::string last_observation(const ChatRequest& r) {
  if (r.messages.size() < 2 || r.messages.back().role != Role::user) return {};
  const auto& text = r.messages.back().content;
  return text.rfind("Observation:", 0) == 0 ? text : std::string();
}

std::vector<int> puzzle_numbers(const std::string& task) {
  std::smatch m;
  static const std::regex re(R"(Use the numbers ([0-9 ]+) and)");
  std::vector<int> out;
  if (!std::regex_search(task, m, re)) return out;
  std::istringstream in(m[1].str());
  for (int v; in >> v;) out.push_back(v);
  return out;
}

std::string puzzle_key(const std::vector<int>& numbers) {
  std::string key;
  for (int v : numbers) key += (key.empty() ? "" : " ") + std::to_string(v);
  return key;
}

// The text after "Result of <tool>:\n" in an observation.
std::string result_of(const std::string& observation, const std::string& tool) {
  const std::string marker = "Result of " + tool + ":\n";
  const auto pos = observation.find(marker);
  if (pos == std::string::npos) return {};
  const auto start = pos + marker.size();
  const auto end = observation.find('\n', start);
  return agentdistill::trim(observation.substr(start, end == std::string::npos ? std::string::npos : end - start));
}

std::string sum_expression(const std::vector<int>& numbers) {
  std::string e;
  for (int v : numbers) e += (e.empty() ? "" : "+") + std::to_string(v);
  return e;
}

std::string mcp_block(const std::string& name) { return "<mcp>\n" + script(name) + "</mcp>\n"; }

std::string teacher_turn(const ChatRequest& r) {
  const auto numbers = puzzle_numbers(first_user(r));
  if (numbers.size() != 4) return "I cannot read this task.\nanswer: unknown";
  const json nums = numbers;
  const int turn = assistant_turns(r);
  const std::string obs = last_observation(r);
  const std::string key = puzzle_key(numbers);

  if (key == "1 1 4 6") return "Four times six is 24 and multiplying by one changes nothing.\nanswer: 4*6*1*1";

  if (key == "2 3 5 7") {  // goes astray and answers wrongly
    if (turn == 0) return "Let me first see how large the numbers are together.\n" + mcp_block("summer");
    if (turn == 1) return "Summing them.\n" + tool_call("sum_numbers", {{"numbers", nums}});
    return "The sum is close enough to 24.\nanswer: " + sum_expression(numbers);
  }

  if (key == "1 2 3 4") {  // broken script, repaired, then double-checked
    if (turn == 0) return "A brute-force solver will settle this.\n" + mcp_block("broken_solver");
    if (turn == 1) return "The script had a syntax error. Here is the fixed version.\n" + mcp_block("solver");
    if (turn == 2) return "Now run it.\n" + tool_call("solve_24", {{"numbers", nums}});
    if (turn == 3) {
      const std::string expr = result_of(obs, "solve_24");
      return "Let me verify the expression with a separate checker.\n" + mcp_block("checker") +
             tool_call("check_24", {{"expression", expr}, {"numbers", nums}});
    }
    std::string expr;
    for (auto it = r.messages.rbegin(); it != r.messages.rend() && expr.empty(); ++it)
      expr = result_of(it->content, "solve_24");
    return "The checker confirms it.\nanswer: " + expr;
  }

  if (turn == 0) return "I will write a general solver for this puzzle.\n" + mcp_block("solver");
  if (turn == 1) {
    if (obs.find("valid; tools: solve_24") == std::string::npos)
      return "The solver did not start.\nanswer: " + sum_expression(numbers);
    return "Running the solver on the numbers.\n" + tool_call("solve_24", {{"numbers", nums}});
  }
  const std::string expr = result_of(obs, "solve_24");
  return "The solver found an expression.\nanswer: " + (expr.empty() ? sum_expression(numbers) : expr);
}

std::string student_turn(const ChatRequest& r) {
  const auto numbers = puzzle_numbers(first_user(r));
  if (numbers.size() != 4) return "answer: unknown";
  const bool has_solver = system_text(r).find("- solve_24") != std::string::npos;
  const std::string obs = last_observation(r);
  if (has_solver && assistant_turns(r) == 0)
    return "I can use the solver tool.\n" + tool_call("solve_24", {{"numbers", json(numbers)}});
  const std::string expr = result_of(obs, "solve_24");
  if (!expr.empty() && expr != "no solution") return "The tool returned an expression.\nanswer: " + expr;
  return "Adding the numbers should be close.\nanswer: " + sum_expression(numbers);
}

struct ToolDef {
  std::string name;
  std::vector<std::string> params;
  std::string summary;
};

std::vector<ToolDef> tool_defs(const std::string& script_text) {
  std::vector<ToolDef> out;
  static const std::regex def_re(R"(@mcp\.tool\(\)\s*\ndef (\w+)\(([^)]*)\)[^\n]*\n\s*\"\"\"([^\n]*))");
  for (std::sregex_iterator it(script_text.begin(), script_text.end(), def_re), end; it != end; ++it) {
    ToolDef d{(*it)[1].str(), {}, agentdistill::trim((*it)[3].str())};
    std::istringstream params((*it)[2].str());
    for (std::string p; std::getline(params, p, ',');) {
      p = agentdistill::trim(p.substr(0, p.find_first_of(":=")));
      if (!p.empty()) d.params.push_back(p);
    }
    out.push_back(std::move(d));
  }
  return out;
}

std::string param_description(const std::string& script_text, const std::string& name) {
  std::smatch m;
  const std::regex re("\\n\\s+" + name + ": ([^\\n]+)");
  return std::regex_search(script_text, m, re) ? agentdistill::trim(m[1].str()) : std::string();
}

std::string abstraction_reply(const std::string& prompt) {
  const std::string open = "Original script:\n```python\n";
  const auto start = prompt.find(open);
  if (start == std::string::npos) return "I could not find the script.";
  const auto body_start = start + open.size();
  const auto end = prompt.find("\n```", body_start);
  const std::string original = prompt.substr(body_start, end == std::string::npos ? std::string::npos : end + 1 - body_start);
  json params = json::array();
  std::string summary;
  for (const auto& d : tool_defs(original)) {
    if (summary.empty()) summary = d.summary;
    for (const auto& p : d.params) params.push_back({{"name", p}, {"description", param_description(original, p)}});
  }
  return "The script is already general; inputs arrive as parameters.\n" + fenced("python", original) +
         fenced("json", json{{"summary", summary}, {"parameters", params}}.dump());
}

std::string label_for(const std::string& tool_names) {
  static const std::vector<std::pair<std::string, std::string>> rules{
      {"24", "numeric analysis"}, {"sum", "numeric analysis"},  {"number", "numeric analysis"},
      {"image", "image utils"},   {"region", "image utils"},    {"brain", "image utils"}};
  const std::string lower = agentdistill::to_lower(tool_names);
  for (const auto& [needle, label] : rules)
    if (lower.find(needle) != std::string::npos) return label;
  return "general utils";
}

std::string cluster_reply(const std::string& prompt) {
  json groups = json::object();
  static const std::regex item_re(R"(### Tool (\d+)\nSummary: [^\n]*\nTool names: ([^\n]*))");
  for (std::sregex_iterator it(prompt.begin(), prompt.end(), item_re), end; it != end; ++it) {
    groups[label_for((*it)[2].str())].push_back(std::stoi((*it)[1].str()));
  }
  return "Grouping by what the tools compute.\n" + fenced("json", groups.dump());
}

std::string consolidation_reply(const std::string& prompt) {
  static const std::string open = "# --- tools ---\n";
  static const std::string close = "# --- end tools ---\n";
  std::vector<std::string> members;
  for (const auto& b : agentdistill::scan_blocks(prompt))
    if (b.info == "python") members.push_back(b.body);
  if (members.empty()) return "Nothing to merge.";
  const std::string& first = members.front();
  const auto head_end = first.find(open);
  const auto tail_start = first.find(close);
  if (head_end == std::string::npos || tail_start == std::string::npos) return fenced("python", first);

  std::string merged = first.substr(0, head_end + open.size());
  std::map<std::string, bool> seen;
  for (const auto& m : members) {
    const auto a = m.find(open);
    const auto b = m.find(close);
    if (a == std::string::npos || b == std::string::npos) continue;
    const std::string section = m.substr(a + open.size(), b - a - open.size());
    bool fresh = false;
    for (const auto& d : tool_defs(section)) {
      if (!seen[d.name]) fresh = true;
      seen[d.name] = true;
    }
    if (fresh) merged += section + "\n";
  }
  merged += first.substr(tail_start);
  return "Merged every member tool into one server.\n" + fenced("python", merged);
}

}  // namespace

std::string script(const std::string& name) {
  const std::string path = std::string(AGENTDISTILL_SOURCE_DIR) + "/fixtures/scripted/" + name + ".py";
  std::ifstream in(path);
  if (!in) throw agentdistill::IoError("missing scripted fixture " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ChatResponse reply(const ChatRequest& request) {
  const std::string prompt = first_user(request);
  std::string content;
  if (request.model_id == "scripted-captioner") {
    content = "A synthetic test image with a bright region on the left.";
  } else if (prompt.find("Rewrite it into a concise, task-agnostic tool server") != std::string::npos) {
    content = abstraction_reply(prompt);
  } else if (prompt.find("Group them by the function") != std::string::npos) {
    content = cluster_reply(prompt);
  } else if (prompt.find("were grouped under the label") != std::string::npos) {
    content = consolidation_reply(prompt);
  } else if (request.model_id == "scripted-teacher") {
    content = teacher_turn(request);
  } else if (request.model_id == "scripted-student") {
    content = student_turn(request);
  } else {
    content = "I do not know how to respond.";
  }
  return ChatResponse{content, std::nullopt, FinishReason::stop};
}

}  // namespace scripted

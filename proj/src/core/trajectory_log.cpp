#include "agentdistill/core/trajectory_log.hpp"

#include "agentdistill/core/errors.hpp"

#include <string>

namespace agentdistill {
namespace {

const json& require(const json& obj, const char* key, json::value_t type, const char* type_name) {
  auto it = obj.find(key);
  if (it == obj.end()) throw Error(std::string("missing required field \"") + key + "\"");
  const bool ok = type == json::value_t::number_integer
                      ? it->is_number_integer()
                      : it->type() == type;
  if (!ok) throw Error(std::string("field \"") + key + "\" must be " + type_name);
  return *it;
}

std::string require_string(const json& obj, const char* key) {
  return require(obj, key, json::value_t::string, "a string").get<std::string>();
}

}  // namespace

Trajectory trajectory_from_json(const json& j) {
  if (!j.is_object()) throw Error("record is not a JSON object");
  Trajectory t;
  t.task_id = require_string(j, "task_id");
  t.agent_role = [&] {
    const auto role = require_string(j, "agent_role");
    if (role == "teacher") return AgentRole::teacher;
    if (role == "student") return AgentRole::student;
    throw Error("agent_role must be \"teacher\" or \"student\"");
  }();
  t.final_answer = require_string(j, "final_answer");
  const json& steps = require(j, "steps", json::value_t::array, "an array");
  if (steps.empty()) throw Error("steps must be non-empty");
  for (const auto& s : steps) {
    if (!s.is_object()) throw Error("step is not a JSON object");
    TrajectoryStep step;
    step.index = require(s, "index", json::value_t::number_integer, "an integer").get<std::int64_t>();
    if (step.index < 0) throw Error("step index must be non-negative");
    if (!t.steps.empty() && step.index <= t.steps.back().index) {
      throw Error("step indices must be strictly increasing");
    }
    step.reasoning = require_string(s, "reasoning");
    step.action = require_string(s, "action");
    step.observation = require_string(s, "observation");
    t.steps.push_back(std::move(step));
  }
  return t;
}

std::vector<Trajectory> parse_trajectory_log(std::istream& in) {
  std::vector<Trajectory> out;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(line_number, std::string("malformed JSON: ") + e.what());
    }
    try {
      out.push_back(trajectory_from_json(record));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(line_number, e.what());
    } catch (const json::exception& e) {
      throw ParseError(line_number, e.what());
    }
  }
  if (in.bad()) throw IoError("read failure on trajectory log");
  return out;
}

std::size_t write_trajectory_log(const std::vector<Trajectory>& trajectories, std::ostream& out) {
  std::size_t bytes = 0;
  for (const auto& t : trajectories) {
    const std::string line = compact(json(t)) + "\n";
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
    bytes += line.size();
  }
  out.flush();
  if (!out) throw IoError("write failure on trajectory log");
  return bytes;
}

}  // namespace agentdistill

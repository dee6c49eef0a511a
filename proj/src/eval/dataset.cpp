#include "agentdistill/eval/dataset.hpp"

#include "agentdistill/core/errors.hpp"
#include "agentdistill/core/text_blocks.hpp"
#include "agentdistill/eval/game24.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace agentdistill::eval {
namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      fields.push_back(trim(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(trim(field));
  return fields;
}

bool is_integer(const std::string& s) {
  return !s.empty() && s.find_first_not_of("0123456789") == std::string::npos;
}

std::string join_numbers(const Game24Numbers& n) {
  return std::to_string(n[0]) + " " + std::to_string(n[1]) + " " + std::to_string(n[2]) + " " +
         std::to_string(n[3]);
}

TaskExample game24_task(std::string id, const Game24Numbers& numbers) {
  TaskExample t;
  t.id = std::move(id);
  t.input_text = join_numbers(numbers);
  t.label = "24";
  t.task_kind = TaskKind::game24;
  return t;
}

std::vector<TaskExample> load_game24_csv(std::istream& in) {
  std::vector<TaskExample> out;
  std::string line;
  std::size_t line_number = 0;
  int puzzles_col = -1;
  int rank_col = -1;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    if (out.empty() && puzzles_col < 0 && !is_integer(fields[0]) && line_number == 1) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        const auto name = to_lower(fields[i]);
        if (name == "puzzles" || name == "puzzle" || name == "numbers") puzzles_col = static_cast<int>(i);
        if (name == "rank") rank_col = static_cast<int>(i);
      }
      continue;
    }
    std::optional<Game24Numbers> numbers;
    std::string id;
    if (puzzles_col >= 0) {
      if (static_cast<std::size_t>(puzzles_col) >= fields.size()) throw ParseError(line_number, "missing puzzle column");
      numbers = parse_game24_numbers(fields[puzzles_col]);
      if (rank_col >= 0 && static_cast<std::size_t>(rank_col) < fields.size()) id = "g24-" + fields[rank_col];
    } else {
      if (fields.size() != 4 && fields.size() != 5) throw ParseError(line_number, "expected 4 numbers and an optional rank");
      numbers = parse_game24_numbers(fields[0] + " " + fields[1] + " " + fields[2] + " " + fields[3]);
      if (fields.size() == 5) id = "g24-" + fields[4];
    }
    if (!numbers) throw ParseError(line_number, "expected four positive integers");
    if (id.empty()) id = "g24-" + std::to_string(out.size() + 1);
    out.push_back(game24_task(std::move(id), *numbers));
  }
  return out;
}

std::vector<TaskExample> load_jsonl(std::istream& in, TaskKind kind, const std::filesystem::path& base) {
  std::vector<TaskExample> out;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(line_number, std::string("malformed JSON: ") + e.what());
    }
    if (!record.is_object()) throw ParseError(line_number, "record is not a JSON object");
    auto string_field = [&](const char* key) -> std::optional<std::string> {
      auto it = record.find(key);
      if (it == record.end() || it->is_null()) return std::nullopt;
      if (it->is_string()) return it->get<std::string>();
      if (it->is_number_integer()) return std::to_string(it->get<std::int64_t>());
      throw ParseError(line_number, std::string("field \"") + key + "\" must be a string");
    };
    if (kind == TaskKind::game24) {
      std::optional<Game24Numbers> numbers;
      if (record.contains("numbers") && record["numbers"].is_array()) {
        std::string text;
        for (const auto& n : record["numbers"]) {
          if (!n.is_number_integer()) throw ParseError(line_number, "numbers must be integers");
          text += std::to_string(n.get<std::int64_t>()) + " ";
        }
        numbers = parse_game24_numbers(text);
      } else if (auto puzzle = string_field("puzzle")) {
        numbers = parse_game24_numbers(*puzzle);
      } else {
        throw ParseError(line_number, "missing required field \"numbers\"");
      }
      if (!numbers) throw ParseError(line_number, "expected four positive integers");
      auto id = string_field("id").value_or("g24-" + std::to_string(out.size() + 1));
      out.push_back(game24_task(std::move(id), *numbers));
      continue;
    }
    TaskExample t;
    t.task_kind = kind;
    auto id = string_field("id");
    auto question = string_field("question");
    auto answer = string_field("answer");
    if (!id) throw ParseError(line_number, "missing required field \"id\"");
    if (!question) throw ParseError(line_number, "missing required field \"question\"");
    if (!answer || answer->empty()) throw ParseError(line_number, "missing required field \"answer\"");
    t.id = *id;
    t.input_text = *question;
    t.label = *answer;
    if (auto image = string_field("image")) {
      std::filesystem::path p(*image);
      t.image_ref = p.is_absolute() ? p.string() : (base / p).lexically_normal().string();
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

std::vector<TaskExample> load_dataset(const std::filesystem::path& path, TaskKind kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset " + path.string());
  std::vector<TaskExample> out =
      path.extension() == ".csv" ? load_game24_csv(in) : load_jsonl(in, kind, path.parent_path());
  if (path.extension() == ".csv" && kind != TaskKind::game24) {
    throw ParseError(1, "CSV datasets are only supported for game24");
  }
  std::set<std::string> ids;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!ids.insert(out[i].id).second) throw ParseError(i + 1, "duplicate task id '" + out[i].id + "'");
  }
  return out;
}

}  // namespace agentdistill::eval

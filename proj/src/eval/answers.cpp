#include "agentdistill/eval/answers.hpp"

#include "agentdistill/core/text_blocks.hpp"
#include "agentdistill/eval/game24.hpp"

#include <cctype>

namespace agentdistill::eval {
namespace {

std::string collapse_whitespace(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::string extract_expression(std::string_view raw) {
  const std::string lower = to_lower(raw);
  std::string_view text = raw;
  const auto marker = lower.rfind("answer:");
  if (marker != std::string::npos) {
    text = raw.substr(marker + 7);
    const auto nl = text.find('\n');
    if (nl != std::string_view::npos) text = text.substr(0, nl);
  } else {
    // Without a marker, the last non-empty line carries the answer.
    std::string trimmed = trim(raw);
    const auto nl = trimmed.rfind('\n');
    if (nl != std::string::npos) return extract_expression(trimmed.substr(nl + 1));
  }
  std::string expr = trim(text);
  const auto eq = expr.rfind('=');
  if (eq != std::string::npos && trim(std::string_view(expr).substr(eq + 1)) == "24") {
    expr = trim(std::string_view(expr).substr(0, eq));
  }
  return expr;
}

}  // namespace

std::string normalize_answer(std::string_view raw, TaskKind kind) {
  if (kind == TaskKind::game24) return extract_expression(raw);
  std::string out = collapse_whitespace(to_lower(raw));
  while (!out.empty()) {
    const char c = out.back();
    if (c == '.' || c == '!' || c == '?' || c == ',' || c == ';' || c == ':') {
      out.pop_back();
    } else {
      break;
    }
  }
  return trim(out);
}

bool is_correct(const TaskExample& task, std::string_view final_answer) {
  if (task.task_kind == TaskKind::game24) {
    const auto numbers = parse_game24_numbers(task.input_text);
    if (!numbers) return false;
    return verify_game24(*numbers, normalize_answer(final_answer, TaskKind::game24));
  }
  const std::string answer = normalize_answer(final_answer, task.task_kind);
  return !answer.empty() && answer == normalize_answer(task.label, task.task_kind);
}

}  // namespace agentdistill::eval

#pragma once

#include "agentdistill/core/types.hpp"

#include <string>
#include <string_view>

namespace agentdistill::eval {

// vqa/freeform: case-folded, trimmed, terminal punctuation stripped, inner
// whitespace collapsed. game24: the expression after an optional `answer:`
// prefix (and before an optional trailing `= 24`), trimmed.
std::string normalize_answer(std::string_view raw, TaskKind kind);

// The indicator used by filtering, episodes, and metrics alike.
bool is_correct(const TaskExample& task, std::string_view final_answer);

}  // namespace agentdistill::eval

#pragma once

#include "agentdistill/core/types.hpp"

#include <filesystem>
#include <vector>

namespace agentdistill::eval {

// game24: `.csv` rows of four integers (optional trailing rank column, an
// optional header naming `Puzzles`/`Rank` columns), or `.jsonl` records
// {id?, numbers:[a,b,c,d]} / {id?, puzzle:"a b c d"}.
// vqa/freeform: `.jsonl` records {id, question, image?, answer}; relative
// image paths resolve against the dataset's directory.
// Errors are ParseError with the 1-based record line.
std::vector<TaskExample> load_dataset(const std::filesystem::path& path, TaskKind kind);

}  // namespace agentdistill::eval

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace agentdistill {

// A delimited region of model output. `begin`/`end` cover the whole region
// including its delimiter lines; `body` is the text between them.
struct TextBlock {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string info;  // fence info string (first word), empty for <mcp> blocks
  std::string body;
  bool tagged_mcp = false;
};

// Line-oriented scan for ``` / ~~~ fenced code blocks and <mcp>...</mcp>
// regions, in document order. Unterminated regions are not reported. A fence
// inside an <mcp> region belongs to that region.
std::vector<TextBlock> scan_blocks(std::string_view text);

// Removes the given regions from text and trims the result.
std::string strip_blocks(std::string_view text, const std::vector<TextBlock>& blocks);

std::string trim(std::string_view text);
std::string to_lower(std::string_view text);

}  // namespace agentdistill

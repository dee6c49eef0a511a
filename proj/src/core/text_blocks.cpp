#include "agentdistill/core/text_blocks.hpp"

#include <algorithm>
#include <cctype>
#include <optional>

namespace agentdistill {
namespace {

struct Line {
  std::size_t begin;
  std::size_t end;  // one past the newline, or text end
  std::string_view content;
};

std::vector<Line> split_lines(std::string_view text) {
  std::vector<Line> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::size_t stop = nl == std::string_view::npos ? text.size() : nl;
    std::string_view content = text.substr(pos, stop - pos);
    if (!content.empty() && content.back() == '\r') content.remove_suffix(1);
    const std::size_t next = nl == std::string_view::npos ? text.size() : nl + 1;
    lines.push_back({pos, next, content});
    pos = next;
  }
  return lines;
}

struct Fence {
  char ch;
  std::size_t length;
  std::string info;
};

std::optional<Fence> opening_fence(std::string_view line) {
  std::size_t indent = 0;
  while (indent < line.size() && indent < 4 && line[indent] == ' ') ++indent;
  if (indent > 3 || indent >= line.size()) return std::nullopt;
  const char ch = line[indent];
  if (ch != '`' && ch != '~') return std::nullopt;
  std::size_t n = indent;
  while (n < line.size() && line[n] == ch) ++n;
  const std::size_t length = n - indent;
  if (length < 3) return std::nullopt;
  std::string rest = trim(line.substr(n));
  if (ch == '`' && rest.find('`') != std::string::npos) return std::nullopt;
  const auto space = rest.find_first_of(" \t");
  return Fence{ch, length, space == std::string::npos ? rest : rest.substr(0, space)};
}

bool closes(std::string_view line, const Fence& fence) {
  const std::string t = trim(line);
  if (t.size() < fence.length) return false;
  return std::all_of(t.begin(), t.end(), [&](char c) { return c == fence.ch; });
}

std::string join(const std::vector<Line>& lines, std::size_t from, std::size_t to) {
  std::string out;
  for (std::size_t i = from; i < to; ++i) {
    out.append(lines[i].content);
    out.push_back('\n');
  }
  return out;
}

// An <mcp> body that is exactly one fenced block is unwrapped to its content.
std::string unwrap_single_fence(const std::string& body) {
  const auto lines = split_lines(body);
  std::size_t first = 0;
  std::size_t last = lines.size();
  while (first < last && trim(lines[first].content).empty()) ++first;
  while (last > first && trim(lines[last - 1].content).empty()) --last;
  if (last - first < 2) return body;
  const auto fence = opening_fence(lines[first].content);
  if (!fence || !closes(lines[last - 1].content, *fence)) return body;
  for (std::size_t i = first + 1; i + 1 < last; ++i) {
    if (closes(lines[i].content, *fence)) return body;
  }
  return join(lines, first + 1, last - 1);
}

}  // namespace

std::string trim(std::string_view text) {
  const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && is_space(static_cast<unsigned char>(text[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(text[e - 1]))) --e;
  return std::string(text.substr(b, e - b));
}

std::string to_lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<TextBlock> scan_blocks(std::string_view text) {
  const auto lines = split_lines(text);
  std::vector<TextBlock> blocks;
  std::size_t i = 0;
  while (i < lines.size()) {
    const std::string t = trim(lines[i].content);
    if (t == "<mcp>") {
      std::size_t j = i + 1;
      std::optional<Fence> inner;
      while (j < lines.size()) {
        if (inner) {
          if (closes(lines[j].content, *inner)) inner.reset();
        } else if (trim(lines[j].content) == "</mcp>") {
          break;
        } else {
          inner = opening_fence(lines[j].content);
        }
        ++j;
      }
      if (j >= lines.size()) {
        ++i;
        continue;
      }
      TextBlock block;
      block.begin = lines[i].begin;
      block.end = lines[j].end;
      block.body = unwrap_single_fence(join(lines, i + 1, j));
      block.tagged_mcp = true;
      blocks.push_back(std::move(block));
      i = j + 1;
      continue;
    }
    if (const auto fence = opening_fence(lines[i].content)) {
      std::size_t j = i + 1;
      while (j < lines.size() && !closes(lines[j].content, *fence)) ++j;
      if (j >= lines.size()) {
        ++i;
        continue;
      }
      TextBlock block;
      block.begin = lines[i].begin;
      block.end = lines[j].end;
      block.info = fence->info;
      block.body = join(lines, i + 1, j);
      blocks.push_back(std::move(block));
      i = j + 1;
      continue;
    }
    ++i;
  }
  return blocks;
}

std::string strip_blocks(std::string_view text, const std::vector<TextBlock>& blocks) {
  std::string out;
  std::size_t pos = 0;
  for (const auto& b : blocks) {
    if (b.begin < pos) continue;
    out.append(text.substr(pos, b.begin - pos));
    pos = b.end;
  }
  if (pos < text.size()) out.append(text.substr(pos));
  return trim(out);
}

}  // namespace agentdistill

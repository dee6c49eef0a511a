#include "agentdistill/core/prompts.hpp"

#include "agentdistill/core/digest.hpp"
#include "agentdistill/core/errors.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace agentdistill {

PromptLibrary::PromptLibrary(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::filesystem::path PromptLibrary::default_dir() {
  if (const char* env = std::getenv("AGENTDISTILL_PROMPTS_DIR"); env && *env) return env;
  return AGENTDISTILL_PROMPTS_DIR;
}

const std::vector<std::string>& PromptLibrary::asset_names() {
  static const std::vector<std::string> names{"abstract", "cluster", "consolidate", "agents/teacher",
                                              "agents/student"};
  return names;
}

std::string PromptLibrary::load(const std::string& name) const {
  const auto path = dir_ / (name + ".txt");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read prompt asset " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string PromptLibrary::digest(const std::string& name) const { return sha256_hex(load(name)); }

std::map<std::string, std::string> PromptLibrary::digests() const {
  std::map<std::string, std::string> out;
  for (const auto& name : asset_names()) out.emplace(name, digest(name));
  return out;
}

std::string render_template(std::string_view text, const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t open = text.find("{{", pos);
    if (open == std::string_view::npos) break;
    const std::size_t close = text.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    const std::string key(text.substr(open + 2, close - open - 2));
    const auto it = values.find(key);
    if (it == values.end()) throw ConfigError("prompt placeholder {{" + key + "}} has no value");
    out.append(text.substr(pos, open - pos));
    out.append(it->second);
    pos = close + 2;
  }
  out.append(text.substr(pos));
  return out;
}

}  // namespace agentdistill

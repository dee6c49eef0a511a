#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace agentdistill {

// Prompt templates shipped as text assets. Names are paths relative to the
// prompts directory without the .txt suffix, e.g. "abstract" or
// "agents/student".
class PromptLibrary {
 public:
  explicit PromptLibrary(std::filesystem::path dir = default_dir());

  static std::filesystem::path default_dir();
  static const std::vector<std::string>& asset_names();

  const std::filesystem::path& dir() const { return dir_; }
  std::string load(const std::string& name) const;  // throws IoError
  std::string digest(const std::string& name) const;
  // name -> sha256 of every shipped asset
  std::map<std::string, std::string> digests() const;

 private:
  std::filesystem::path dir_;
};

// Single-pass substitution of {{key}} placeholders. Substituted text is not
// rescanned. Throws ConfigError for a placeholder with no value.
std::string render_template(std::string_view text, const std::map<std::string, std::string>& values);

}  // namespace agentdistill

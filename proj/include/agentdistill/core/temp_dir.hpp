#pragma once

#include <filesystem>
#include <string>

namespace agentdistill {

// mkdtemp-backed scratch directory, removed recursively on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& prefix = "agentdistill");
  ~TempDir();
  TempDir(TempDir&& other) noexcept;
  TempDir& operator=(TempDir&& other) noexcept;
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace agentdistill

#pragma once

#include <filesystem>

namespace testing_paths {

inline std::filesystem::path source_dir() { return AGENTDISTILL_SOURCE_DIR; }
inline std::filesystem::path fixture_tool(const char* name) { return source_dir() / "fixtures" / "tools" / name; }
inline std::filesystem::path fault_tool(const char* name) { return source_dir() / "tests" / "fixtures" / "tools" / name; }
inline std::filesystem::path cli_binary() { return AGENTDISTILL_CLI_PATH; }

}  // namespace testing_paths

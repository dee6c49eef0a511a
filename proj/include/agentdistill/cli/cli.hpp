#pragma once

#include <atomic>
#include <iosfwd>
#include <string>
#include <vector>

namespace agentdistill::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Runs one invocation. `args` excludes the program name. Data goes to `out`,
// diagnostics (always prefixed "error: ") to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const std::atomic<bool>* cancel = nullptr);

// Process entry point: installs the SIGINT handler and forwards to run().
int main(int argc, char** argv);

}  // namespace agentdistill::cli

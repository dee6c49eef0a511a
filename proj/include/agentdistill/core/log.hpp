#pragma once

#include <spdlog/spdlog.h>

namespace agentdistill {

// Library-wide logger; always writes to stderr so stdout stays data-only.
spdlog::logger& logger();

}  // namespace agentdistill

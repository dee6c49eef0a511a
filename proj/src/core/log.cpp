#include "agentdistill/core/log.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>

namespace agentdistill {

spdlog::logger& logger() {
  static std::shared_ptr<spdlog::logger> instance = [] {
    auto existing = spdlog::get("agentdistill");
    if (existing) return existing;
    auto l = spdlog::stderr_color_mt("agentdistill");
    l->set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
    l->set_level(spdlog::level::warn);
    return l;
  }();
  return *instance;
}

}  // namespace agentdistill

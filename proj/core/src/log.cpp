#include "imag/log.hpp"

#include <cstdlib>
#include <iostream>

namespace imag {

LogLevel log_level() {
  static LogLevel level = [] {
    const char* env = std::getenv("IMAG_LOG");
    if (env == nullptr) return LogLevel::kError;
    std::string v(env);
    if (v == "debug") return LogLevel::kDebug;
    if (v == "info") return LogLevel::kInfo;
    return LogLevel::kError;
  }();
  return level;
}

void log_error(const std::string& msg) {
  std::cerr << "[imag:error] " << msg << "\n";
}

void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::kInfo) std::cerr << "[imag] " << msg << "\n";
}

void log_debug(const std::string& msg) {
  if (log_level() >= LogLevel::kDebug) std::cerr << "[imag:debug] " << msg << "\n";
}

}  // namespace imag

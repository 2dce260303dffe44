#pragma once

#include <string>

namespace imag {

enum class LogLevel { kError = 0, kInfo = 1, kDebug = 2 };

// Level comes from the IMAG_LOG env var ({error,info,debug}), read once.
LogLevel log_level();

void log_error(const std::string& msg);
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

}  // namespace imag

#pragma once

#include <functional>
#include <string>

namespace gisc::log {

enum class Level { info, warning, error };

using Sink = std::function<void(Level, const std::string&)>;

// Replaces the process-wide sink (stderr by default); returns the previous one.
Sink set_sink(Sink sink);

void write(Level level, const std::string& message);
inline void info(const std::string& m) { write(Level::info, m); }
inline void warn(const std::string& m) { write(Level::warning, m); }
inline void error(const std::string& m) { write(Level::error, m); }

}  // namespace gisc::log

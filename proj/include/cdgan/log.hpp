#pragma once

#include <cstdlib>
#include <iostream>
#include <string>

namespace cdgan::logging {

enum class Level { Error = 0, Info = 1, Debug = 2 };

inline Level level_from_env() {
  const char* v = std::getenv("CDGAN_LOG_LEVEL");
  if (v == nullptr) return Level::Info;
  const std::string s(v);
  if (s == "error") return Level::Error;
  if (s == "debug") return Level::Debug;
  return Level::Info;
}

inline Level& threshold() {
  static Level l = level_from_env();
  return l;
}

inline void emit(Level l, const char* tag, const std::string& msg) {
  if (l <= threshold()) std::cerr << "[" << tag << "] " << msg << std::endl;
}

inline void error(const std::string& m) { emit(Level::Error, "error", m); }
inline void info(const std::string& m) { emit(Level::Info, "info", m); }
inline void debug(const std::string& m) { emit(Level::Debug, "debug", m); }

}  // namespace cdgan::logging

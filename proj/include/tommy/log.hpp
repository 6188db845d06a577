#pragma once

#include <chrono>
#include <cstdio>
#include <string>

namespace tommy {

enum class LogLevel : int { quiet = 0, info = 1, debug = 2 };

class Logger {
 public:
  explicit Logger(LogLevel level = LogLevel::info) : level_(level) {}

  void set_level(LogLevel l) { level_ = l; }
  LogLevel level() const { return level_; }

  template <typename... Args>
  void info(const char* fmt, Args... args) const {
    if (level_ >= LogLevel::info) emit("info", fmt, args...);
  }
  template <typename... Args>
  void debug(const char* fmt, Args... args) const {
    if (level_ >= LogLevel::debug) emit("debug", fmt, args...);
  }
  template <typename... Args>
  void error(const char* fmt, Args... args) const {
    emit("error", fmt, args...);
  }

 private:
  template <typename... Args>
  void emit(const char* lvl, const char* fmt, Args... args) const {
    auto now = std::chrono::system_clock::now().time_since_epoch();
    double secs = std::chrono::duration<double>(now).count();
    std::fprintf(stderr, "[%.3f] %s ", secs, lvl);
    std::fprintf(stderr, fmt, args...);
    std::fprintf(stderr, "\n");
  }

  LogLevel level_;
};

}  // namespace tommy

#ifndef NOVELTY_LOG_HPP
#define NOVELTY_LOG_HPP

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>
#include <string_view>

namespace novelty::log {

enum class Level { Error = 0, Info = 1, Debug = 2 };

/// Read once from NOVELTY_LOG (error | info | debug); defaults to error.
inline Level threshold() {
    static const Level level = [] {
        const char* env = std::getenv("NOVELTY_LOG");
        if (!env) return Level::Error;
        const std::string_view v(env);
        if (v == "debug") return Level::Debug;
        if (v == "info") return Level::Info;
        return Level::Error;
    }();
    return level;
}

inline void write(Level level, std::string_view msg) {
    if (static_cast<int>(level) > static_cast<int>(threshold())) return;
    static std::mutex m;
    static constexpr const char* tags[] = {"error", "info", "debug"};
    std::lock_guard lock(m);
    std::cerr << "[" << tags[static_cast<int>(level)] << "] " << msg << '\n';
}

inline void error(std::string_view msg) { write(Level::Error, msg); }
inline void info(std::string_view msg) { write(Level::Info, msg); }
inline void debug(std::string_view msg) { write(Level::Debug, msg); }

} // namespace novelty::log

#endif

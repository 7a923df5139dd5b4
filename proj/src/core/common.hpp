#pragma once

#include <cstdarg>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace rhythmlab {

// Error taxonomy shared with the C API status codes.
enum class ErrorKind {
    invalid_argument,
    io,
    format,
    validation,
    numeric,
    unsupported,
    internal,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

    static Error invalid(const std::string& m) { return {ErrorKind::invalid_argument, m}; }
    static Error io(const std::string& m) { return {ErrorKind::io, m}; }
    static Error format(const std::string& m) { return {ErrorKind::format, m}; }
    static Error validation(const std::string& m) { return {ErrorKind::validation, m}; }
    static Error numeric(const std::string& m) { return {ErrorKind::numeric, m}; }
    static Error unsupported(const std::string& m) { return {ErrorKind::unsupported, m}; }

private:
    ErrorKind kind_;
};

enum class LogLevel : int { debug = 0, info = 1, warning = 2, error = 3 };

using LogSink = void (*)(int level, const char* message, void* user);

void set_log_sink(LogSink sink, void* user);
void log_message(LogLevel level, const std::string& message);
std::string strfmt(const char* fmt, ...);

inline void log_info(const std::string& m) { log_message(LogLevel::info, m); }
inline void log_warn(const std::string& m) { log_message(LogLevel::warning, m); }

// splitmix64; used to derive independent seeds for sub-streams.
uint64_t mix_seed(uint64_t base, uint64_t salt);
uint64_t hash_tag(const char* tag);

inline std::mt19937_64 make_rng(uint64_t seed) { return std::mt19937_64(seed); }

}  // namespace rhythmlab

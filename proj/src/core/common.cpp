#include "core/common.hpp"

#include <atomic>
#include <cstdio>
#include <vector>

namespace rhythmlab {

namespace {

std::atomic<LogSink> g_sink{nullptr};
std::atomic<void*> g_sink_user{nullptr};

}  // namespace

void set_log_sink(LogSink sink, void* user) {
    g_sink_user.store(user);
    g_sink.store(sink);
}

void log_message(LogLevel level, const std::string& message) {
    LogSink sink = g_sink.load();
    if (sink) {
        sink(static_cast<int>(level), message.c_str(), g_sink_user.load());
    } else if (level >= LogLevel::warning) {
        std::fprintf(stderr, "[rhythmlab] %s\n", message.c_str());
    }
}

std::string strfmt(const char* fmt, ...) {
    va_list args;
    va_start(args, fmt);
    va_list copy;
    va_copy(copy, args);
    int n = std::vsnprintf(nullptr, 0, fmt, copy);
    va_end(copy);
    std::string out;
    if (n > 0) {
        std::vector<char> buf(static_cast<size_t>(n) + 1);
        std::vsnprintf(buf.data(), buf.size(), fmt, args);
        out.assign(buf.data(), static_cast<size_t>(n));
    }
    va_end(args);
    return out;
}

uint64_t mix_seed(uint64_t base, uint64_t salt) {
    uint64_t z = base + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

uint64_t hash_tag(const char* tag) {
    // FNV-1a
    uint64_t h = 1469598103934665603ULL;
    for (const char* p = tag; *p; ++p) {
        h ^= static_cast<uint64_t>(static_cast<unsigned char>(*p));
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace rhythmlab

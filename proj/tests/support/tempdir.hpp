#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

namespace test_support {

// Scoped scratch directory under the system temp root.
class TempDir {
public:
    TempDir() {
        std::random_device rd;
        dir_ = std::filesystem::temp_directory_path() /
               ("rhythmlab_test_" + std::to_string(rd()) + "_" + std::to_string(rd()));
        std::filesystem::create_directories(dir_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(dir_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    std::string file(const std::string& name, const std::string& content) const {
        const std::string p = path(name);
        std::ofstream out(p, std::ios::binary);
        out << content;
        return p;
    }

    const std::filesystem::path& root() const { return dir_; }

private:
    std::filesystem::path dir_;
};

}  // namespace test_support

#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "doctest.h"
#include "drpg/error.hpp"

namespace drpg::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("drpg-" + tag + "-" + std::to_string(rd()));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline const std::filesystem::path kFixtures = DRPG_FIXTURES_DIR;

}  // namespace drpg::testing

// Asserts that expr throws drpg::Error with the given code.
#define CHECK_THROWS_CODE(expr, expected)                               \
    do {                                                                \
        bool drpg_thrown = false;                                       \
        try {                                                           \
            (void)(expr);                                               \
        } catch (const ::drpg::Error& drpg_e) {                         \
            drpg_thrown = true;                                         \
            CHECK_MESSAGE(drpg_e.code() == (expected), drpg_e.what());  \
        }                                                               \
        CHECK_MESSAGE(drpg_thrown, "expected an error from " #expr);    \
    } while (0)

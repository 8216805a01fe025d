#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "cornyield/core.hpp"
#include "cornyield/error.hpp"
#include "cornyield/rng.hpp"

namespace cornyield::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("cornyield_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
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

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline Sample random_sample(Rng& rng, std::size_t f, std::size_t t, std::string key = "19001", int year = 2000) {
    Sample s;
    s.key = key;
    s.members = {key};
    s.year = year;
    s.features = Matrix(f, t);
    for (double& v : s.features.data()) v = rng.normal();
    s.target_adjusted = rng.uniform(100.0, 200.0);
    return s;
}

}  // namespace cornyield::testing

// Runs `stmt` and checks that it throws cornyield::Error of the given kind.
#define EXPECT_ERROR_KIND(stmt, expected_kind)                                              \
    do {                                                                                    \
        try {                                                                               \
            stmt;                                                                           \
            ADD_FAILURE() << "expected " << ::cornyield::to_string(expected_kind) << " error"; \
        } catch (const ::cornyield::Error& e_) {                                            \
            EXPECT_EQ(e_.kind(), expected_kind) << e_.what();                               \
        }                                                                                   \
    } while (0)

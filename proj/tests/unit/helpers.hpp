#pragma once

#include <doctest.h>

#include <Eigen/Dense>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "latentstitch/error.hpp"

namespace testing {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> normal;
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(eng);
    return m;
}

inline double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("latentstitch_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline std::vector<std::string> make_ids(std::size_t n, const std::string& prefix = "id") {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back(prefix + std::to_string(i));
    return ids;
}

template <class F>
latentstitch::ErrorCode error_code_of(F&& f) {
    try {
        f();
    } catch (const latentstitch::Error& e) {
        return e.code();
    }
    FAIL("expected a latentstitch::Error");
    return latentstitch::ErrorCode::IoError;
}

}  // namespace testing

#define CHECK_ERROR(expr, code) CHECK(testing::error_code_of([&] { (void)(expr); }) == (code))

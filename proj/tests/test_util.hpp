#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include "doctest.h"
#include "senca/tensor.hpp"

namespace testutil {

// Central-difference gradient check against an analytic gradient. `f` must
// evaluate the scalar loss as a pure function of `x`.
inline void check_gradient(const std::function<double(const senca::Tensor&)>& f,
                           const senca::Tensor& x, const senca::Tensor& analytic,
                           double eps = 1e-3, double tol = 1e-3) {
    REQUIRE(x.same_shape(analytic));
    for (size_t i = 0; i < x.size(); ++i) {
        senca::Tensor xp = x;
        xp[i] += eps;
        senca::Tensor xm = x;
        xm[i] -= eps;
        double fd = (f(xp) - f(xm)) / (2.0 * eps);
        double denom = std::max({std::fabs(fd), std::fabs(analytic[i]), 1e-6});
        INFO("entry ", i, ": analytic=", analytic[i], " fd=", fd);
        CHECK(std::fabs(fd - analytic[i]) / denom < tol);
    }
}

// Same check on a sampled subset of entries (for large tensors).
inline void check_gradient_sampled(const std::function<double(const senca::Tensor&)>& f,
                                   const senca::Tensor& x, const senca::Tensor& analytic,
                                   int samples, uint64_t stride_seed = 1,
                                   double eps = 1e-3, double tol = 1e-3) {
    REQUIRE(x.same_shape(analytic));
    size_t n = x.size();
    for (int s = 0; s < samples; ++s) {
        size_t i = (static_cast<size_t>(s) * 2654435761ULL + stride_seed) % n;
        senca::Tensor xp = x;
        xp[i] += eps;
        senca::Tensor xm = x;
        xm[i] -= eps;
        double fd = (f(xp) - f(xm)) / (2.0 * eps);
        double denom = std::max({std::fabs(fd), std::fabs(analytic[i]), 1e-6});
        INFO("entry ", i, ": analytic=", analytic[i], " fd=", fd);
        CHECK(std::fabs(fd - analytic[i]) / denom < tol);
    }
}

class TempDir {
public:
    explicit TempDir(const std::string& name) {
        path_ = std::filesystem::temp_directory_path() /
                ("senca_test_" + name + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace testutil

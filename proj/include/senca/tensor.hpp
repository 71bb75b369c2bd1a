#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "senca/error.hpp"

namespace senca {

// Dense row-major matrix of doubles. Row/column vectors are 1xN / Nx1,
// scalars are 1x1. All model state and intermediate buffers use this type;
// 32-bit floats appear only at the file-format boundary.
class Tensor {
public:
    Tensor() = default;

    Tensor(int rows, int cols) : rows_(rows), cols_(cols) {
        check_dims(rows, cols);
        data_.assign(static_cast<size_t>(rows) * cols, 0.0);
    }

    Tensor(int rows, int cols, std::vector<double> values)
        : rows_(rows), cols_(cols), data_(std::move(values)) {
        check_dims(rows, cols);
        if (data_.size() != static_cast<size_t>(rows) * cols) {
            throw ShapeError("tensor init: " + std::to_string(data_.size()) +
                             " values for shape " + shape_str());
        }
    }

    static Tensor scalar(double v) {
        Tensor t(1, 1);
        t.data_[0] = v;
        return t;
    }

    static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows) {
        int r = static_cast<int>(rows.size());
        int c = r > 0 ? static_cast<int>(rows.begin()->size()) : 0;
        Tensor t(r, c);
        int i = 0;
        for (const auto& row : rows) {
            if (static_cast<int>(row.size()) != c) {
                throw ShapeError("tensor init: ragged rows");
            }
            int j = 0;
            for (double v : row) t.at(i, j++) = v;
            ++i;
        }
        return t;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& at(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
    double at(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }

    double& operator[](size_t i) { return data_[i]; }
    double operator[](size_t i) const { return data_[i]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    std::string shape_str() const {
        return std::to_string(rows_) + "x" + std::to_string(cols_);
    }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    double scalar_value() const {
        if (rows_ != 1 || cols_ != 1) {
            throw ShapeError("scalar_value on non-scalar tensor " + shape_str());
        }
        return data_[0];
    }

private:
    static void check_dims(int rows, int cols) {
        if (rows < 0 || cols < 0) throw ShapeError("negative tensor dimension");
    }

    int rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                         b.shape_str());
    }
}

}  // namespace senca

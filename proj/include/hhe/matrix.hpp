#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace hhe {

// Dense row-major matrix of doubles. Summation order in all helpers is
// fixed (plain loops), which keeps every computation in the library
// deterministic for a given input.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) {
        assert(i < rows_ && j < cols_);
        return data_[i * cols_ + j];
    }
    double operator()(std::size_t i, std::size_t j) const {
        assert(i < rows_ && j < cols_);
        return data_[i * cols_ + j];
    }

    std::span<double> row(std::size_t i) {
        assert(i < rows_);
        return {data_.data() + i * cols_, cols_};
    }
    std::span<const double> row(std::size_t i) const {
        assert(i < rows_);
        return {data_.data() + i * cols_, cols_};
    }

    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);
double squared_distance(std::span<const double> a, std::span<const double> b);

// a (m x k) * b (k x n)
Matrix matmul(const Matrix& a, const Matrix& b);
// a (m x k) * b^T, b given as (n x k)
Matrix matmul_bt(const Matrix& a, const Matrix& b);
// a^T (k x m) * b (k x n), a given as (k x m)
Matrix matmul_at(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);
// A^T A over columns of a
Matrix gram(const Matrix& a);
double frobenius_squared(const Matrix& m);

}  // namespace hhe

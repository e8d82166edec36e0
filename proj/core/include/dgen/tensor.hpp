// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dgen/errors.hpp"

namespace dgen {

/// Dense order-N tensor of doubles, row-major (last index fastest).
/// Immutable by convention once handed to an algorithm; all operations on
/// tensors are pure functions returning fresh values.
class Tensor {
  public:
    Tensor() = default;

    /// Zero-filled tensor. Order must be >= 1 and every extent >= 1.
    explicit Tensor(std::vector<std::size_t> shape);

    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    [[nodiscard]] std::size_t order() const { return shape_.size(); }
    [[nodiscard]] const std::vector<std::size_t>& shape() const { return shape_; }
    [[nodiscard]] std::size_t extent(std::size_t mode) const;
    [[nodiscard]] std::size_t size() const { return data_.size(); }

    [[nodiscard]] double operator[](std::size_t flat) const { return data_[flat]; }
    [[nodiscard]] double& operator[](std::size_t flat) { return data_[flat]; }

    /// Element access by multi-index (0-based, one index per mode).
    [[nodiscard]] double at(std::span<const std::size_t> idx) const;
    [[nodiscard]] double& at(std::span<const std::size_t> idx);

    [[nodiscard]] std::span<const double> data() const { return data_; }
    [[nodiscard]] std::span<double> data() { return data_; }

    [[nodiscard]] double frobenius_norm() const;

    bool operator==(const Tensor& other) const = default;

  private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

/// Row-major dense matrix. Interchangeable with an order-2 Tensor via
/// to_tensor / Matrix::from_tensor.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix identity(std::size_t n);
    static Matrix from_tensor(const Tensor& t);

    [[nodiscard]] std::size_t rows() const { return rows_; }
    [[nodiscard]] std::size_t cols() const { return cols_; }
    [[nodiscard]] std::size_t size() const { return data_.size(); }

    [[nodiscard]] double operator()(std::size_t r, std::size_t c) const {
        return data_[r * cols_ + c];
    }
    [[nodiscard]] double& operator()(std::size_t r, std::size_t c) {
        return data_[r * cols_ + c];
    }

    [[nodiscard]] std::span<const double> data() const { return data_; }
    [[nodiscard]] std::span<double> data() { return data_; }

    [[nodiscard]] Tensor to_tensor() const;
    [[nodiscard]] Matrix transposed() const;
    [[nodiscard]] double frobenius_norm() const;

    bool operator==(const Matrix& other) const = default;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

[[nodiscard]] Matrix matmul(const Matrix& a, const Matrix& b);

/// y = A^T x  (A rows x cols, x length rows, result length cols).
[[nodiscard]] std::vector<double> matvec_transposed(const Matrix& a,
                                                    std::span<const double> x);

/// y = A x.
[[nodiscard]] std::vector<double> matvec(const Matrix& a, std::span<const double> x);

/// Flat offset of a multi-index under row-major linearization.
[[nodiscard]] std::size_t flat_index(std::span<const std::size_t> shape,
                                     std::span<const std::size_t> idx);

/// Mode-n unfolding. Row r holds the slice with index r along `mode`; the
/// remaining indices are flattened in their original order with the last
/// one fastest (so for mode 0 this is a plain reshape of the row-major
/// data). fold() inverts it exactly.
[[nodiscard]] Matrix unfold(const Tensor& t, std::size_t mode);

[[nodiscard]] Tensor fold(const Matrix& m, std::size_t mode,
                          std::vector<std::size_t> shape);

/// Contraction of mode `mode` with a matrix: replaces extent D_n by
/// m.rows(); requires m.cols() == D_n. Equals fold(m * unfold(t, mode)).
[[nodiscard]] Tensor mode_n_product(const Tensor& t, const Matrix& m,
                                    std::size_t mode);

/// Contraction of mode `mode` with a vector; the mode is squeezed out and
/// the order drops by one. Terms with an exactly-zero coefficient are
/// skipped, so selector vectors reproduce slices bit-for-bit.
[[nodiscard]] Tensor mode_n_vec_product(const Tensor& t, std::span<const double> v,
                                        std::size_t mode);

}  // namespace dgen

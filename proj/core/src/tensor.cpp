// SPDX-License-Identifier: Apache-2.0
#include "dgen/tensor.hpp"

#include <cmath>
#include <string>

namespace dgen {

namespace {

std::size_t checked_element_count(const std::vector<std::size_t>& shape) {
    if (shape.empty()) {
        throw ShapeError("tensor order must be >= 1");
    }
    std::size_t n = 1;
    for (std::size_t e : shape) {
        if (e == 0) {
            throw ShapeError("tensor extents must be >= 1");
        }
        n *= e;
    }
    return n;
}

// (outer, extent, inner) such that flat = (o * extent + m) * inner + i for
// multi-indices split around `mode`.
struct ModeSplit {
    std::size_t outer = 1;
    std::size_t extent = 1;
    std::size_t inner = 1;
};

ModeSplit split_at_mode(const std::vector<std::size_t>& shape, std::size_t mode) {
    ModeSplit s;
    for (std::size_t k = 0; k < mode; ++k) s.outer *= shape[k];
    s.extent = shape[mode];
    for (std::size_t k = mode + 1; k < shape.size(); ++k) s.inner *= shape[k];
    return s;
}

void check_mode(const Tensor& t, std::size_t mode) {
    if (mode >= t.order()) {
        throw InvalidMode("mode " + std::to_string(mode) + " out of range for order " +
                          std::to_string(t.order()));
    }
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(checked_element_count(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_element_count(shape_) != data_.size()) {
        throw ShapeError("tensor data length does not match product of extents");
    }
}

std::size_t Tensor::extent(std::size_t mode) const {
    if (mode >= shape_.size()) {
        throw InvalidMode("extent query for mode " + std::to_string(mode) +
                          " on order-" + std::to_string(shape_.size()) + " tensor");
    }
    return shape_[mode];
}

double Tensor::at(std::span<const std::size_t> idx) const {
    return data_[flat_index(shape_, idx)];
}

double& Tensor::at(std::span<const std::size_t> idx) {
    return data_[flat_index(shape_, idx)];
}

double Tensor::frobenius_norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
}

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {
    if (rows == 0 || cols == 0) {
        throw ShapeError("matrix extents must be >= 1");
    }
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (rows == 0 || cols == 0) {
        throw ShapeError("matrix extents must be >= 1");
    }
    if (data_.size() != rows * cols) {
        throw ShapeError("matrix data length does not match rows*cols");
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::from_tensor(const Tensor& t) {
    if (t.order() != 2) {
        throw ShapeError("only order-2 tensors convert to Matrix");
    }
    return Matrix(t.shape()[0], t.shape()[1],
                  std::vector<double>(t.data().begin(), t.data().end()));
}

Tensor Matrix::to_tensor() const {
    return Tensor({rows_, cols_}, data_);
}

Matrix Matrix::transposed() const {
    Matrix r(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) r(j, i) = (*this)(i, j);
    return r;
}

double Matrix::frobenius_norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: inner dimensions disagree");
    }
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) {
                c(i, j) += aik * b(k, j);
            }
        }
    }
    return c;
}

std::vector<double> matvec_transposed(const Matrix& a, std::span<const double> x) {
    if (x.size() != a.rows()) {
        throw ShapeError("matvec_transposed: vector length does not match rows");
    }
    std::vector<double> y(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double xi = x[i];
        if (xi == 0.0) continue;
        for (std::size_t j = 0; j < a.cols(); ++j) y[j] += xi * a(i, j);
    }
    return y;
}

std::vector<double> matvec(const Matrix& a, std::span<const double> x) {
    if (x.size() != a.cols()) {
        throw ShapeError("matvec: vector length does not match cols");
    }
    std::vector<double> y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

std::size_t flat_index(std::span<const std::size_t> shape,
                       std::span<const std::size_t> idx) {
    if (shape.size() != idx.size()) {
        throw ShapeError("multi-index length does not match tensor order");
    }
    std::size_t flat = 0;
    for (std::size_t k = 0; k < shape.size(); ++k) {
        if (idx[k] >= shape[k]) {
            throw ShapeError("multi-index out of range");
        }
        flat = flat * shape[k] + idx[k];
    }
    return flat;
}

Matrix unfold(const Tensor& t, std::size_t mode) {
    check_mode(t, mode);
    auto [outer, extent, inner] = split_at_mode(t.shape(), mode);
    Matrix m(extent, outer * inner);
    std::span<const double> src = t.data();
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t r = 0; r < extent; ++r) {
            const double* row = src.data() + (o * extent + r) * inner;
            double* dst = m.data().data() + r * (outer * inner) + o * inner;
            for (std::size_t i = 0; i < inner; ++i) dst[i] = row[i];
        }
    }
    return m;
}

Tensor fold(const Matrix& m, std::size_t mode, std::vector<std::size_t> shape) {
    if (mode >= shape.size()) {
        throw InvalidMode("fold: mode out of range");
    }
    auto [outer, extent, inner] = split_at_mode(shape, mode);
    if (m.rows() != extent || m.cols() != outer * inner) {
        throw ShapeError("fold: matrix shape does not match target tensor shape");
    }
    Tensor t(std::move(shape));
    std::span<double> dst = t.data();
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t r = 0; r < extent; ++r) {
            const double* row = m.data().data() + r * (outer * inner) + o * inner;
            double* out = dst.data() + (o * extent + r) * inner;
            for (std::size_t i = 0; i < inner; ++i) out[i] = row[i];
        }
    }
    return t;
}

Tensor mode_n_product(const Tensor& t, const Matrix& m, std::size_t mode) {
    check_mode(t, mode);
    if (m.cols() != t.extent(mode)) {
        throw ShapeError("mode_n_product: matrix cols must equal the mode extent");
    }
    auto [outer, extent, inner] = split_at_mode(t.shape(), mode);
    std::vector<std::size_t> new_shape = t.shape();
    new_shape[mode] = m.rows();

    Tensor out(std::move(new_shape));
    std::span<const double> src = t.data();
    std::span<double> dst = out.data();
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t r = 0; r < m.rows(); ++r) {
            double* acc = dst.data() + (o * m.rows() + r) * inner;
            for (std::size_t k = 0; k < extent; ++k) {
                double c = m(r, k);
                if (c == 0.0) continue;
                const double* row = src.data() + (o * extent + k) * inner;
                for (std::size_t i = 0; i < inner; ++i) acc[i] += c * row[i];
            }
        }
    }
    return out;
}

Tensor mode_n_vec_product(const Tensor& t, std::span<const double> v,
                          std::size_t mode) {
    check_mode(t, mode);
    if (v.size() != t.extent(mode)) {
        throw ShapeError("mode_n_vec_product: vector length must equal the mode extent");
    }
    if (t.order() == 1) {
        throw InvalidMode("mode_n_vec_product: contracting an order-1 tensor "
                          "would produce an order-0 result");
    }
    auto [outer, extent, inner] = split_at_mode(t.shape(), mode);
    std::vector<std::size_t> new_shape;
    new_shape.reserve(t.order() - 1);
    for (std::size_t k = 0; k < t.order(); ++k) {
        if (k != mode) new_shape.push_back(t.shape()[k]);
    }

    Tensor out(std::move(new_shape));
    std::span<const double> src = t.data();
    std::span<double> dst = out.data();
    bool first_term = true;
    for (std::size_t k = 0; k < extent; ++k) {
        double c = v[k];
        if (c == 0.0) continue;
        for (std::size_t o = 0; o < outer; ++o) {
            const double* row = src.data() + (o * extent + k) * inner;
            double* acc = dst.data() + o * inner;
            if (first_term) {
                // Assign instead of accumulate so a selector vector yields
                // the slice bit-for-bit.
                if (c == 1.0) {
                    for (std::size_t i = 0; i < inner; ++i) acc[i] = row[i];
                } else {
                    for (std::size_t i = 0; i < inner; ++i) acc[i] = c * row[i];
                }
            } else if (c == 1.0) {
                for (std::size_t i = 0; i < inner; ++i) acc[i] += row[i];
            } else {
                for (std::size_t i = 0; i < inner; ++i) acc[i] += c * row[i];
            }
        }
        first_term = false;
    }
    return out;
}

}  // namespace dgen

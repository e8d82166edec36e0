// SPDX-License-Identifier: Apache-2.0
#include "dgen/svd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace dgen {

namespace {

constexpr int kMaxSweeps = 60;
constexpr double kGramTolerance = 1e-12;  // scaled by |A|_F^2

// One-sided Jacobi on a tall (rows >= cols) matrix held column-major in
// `cols` for contiguous column access.
struct ColumnMajor {
    std::size_t rows = 0;
    std::vector<std::vector<double>> cols;
};

ColumnMajor to_columns(const Matrix& a) {
    ColumnMajor w;
    w.rows = a.rows();
    w.cols.assign(a.cols(), std::vector<double>(a.rows()));
    for (std::size_t j = 0; j < a.cols(); ++j)
        for (std::size_t i = 0; i < a.rows(); ++i) w.cols[j][i] = a(i, j);
    return w;
}

double dot(const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

void rotate(std::vector<double>& p, std::vector<double>& q, double c, double s) {
    for (std::size_t i = 0; i < p.size(); ++i) {
        double pi = p[i];
        double qi = q[i];
        p[i] = c * pi - s * qi;
        q[i] = s * pi + c * qi;
    }
}

// Orthonormal replacement for a numerically-null column: the first canonical
// basis vector with a significant residual after projecting out the columns
// fixed so far.
std::vector<double> complete_column(const std::vector<std::vector<double>>& fixed,
                                    std::size_t rows) {
    for (std::size_t e = 0; e < rows; ++e) {
        std::vector<double> cand(rows, 0.0);
        cand[e] = 1.0;
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& u : fixed) {
                double proj = dot(cand, u);
                for (std::size_t i = 0; i < rows; ++i) cand[i] -= proj * u[i];
            }
        }
        double n = std::sqrt(dot(cand, cand));
        if (n > 0.5) {
            for (double& x : cand) x /= n;
            return cand;
        }
    }
    throw NumericError("svd: failed to complete an orthonormal basis");
}

SvdResult svd_tall(const Matrix& a) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    ColumnMajor w = to_columns(a);

    double norm2 = 0.0;
    for (double x : a.data()) norm2 += x * x;
    const double gram_threshold = kGramTolerance * norm2;

    std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
    for (std::size_t j = 0; j < n; ++j) v[j][j] = 1.0;

    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double max_gram = 0.0;
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double alpha = dot(w.cols[p], w.cols[p]);
                double beta = dot(w.cols[q], w.cols[q]);
                double gamma = dot(w.cols[p], w.cols[q]);
                max_gram = std::max(max_gram, std::abs(gamma));
                if (gamma == 0.0) continue;
                // Skip pairs already orthogonal to the columns' own scale;
                // keeps null-space columns mutually orthogonal instead of
                // stopping at the absolute threshold.
                if (std::abs(gamma) <=
                    1e-15 * std::sqrt(alpha) * std::sqrt(beta)) {
                    continue;
                }
                double zeta = (beta - alpha) / (2.0 * gamma);
                double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                           (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                double c = 1.0 / std::sqrt(1.0 + t * t);
                double s = c * t;
                rotate(w.cols[p], w.cols[q], c, s);
                rotate(v[p], v[q], c, s);
                rotated = true;
            }
        }
        if (max_gram < gram_threshold || !rotated) break;
    }

    std::vector<double> sigma(n);
    for (std::size_t j = 0; j < n; ++j) sigma[j] = std::sqrt(dot(w.cols[j], w.cols[j]));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return sigma[i] > sigma[j]; });

    SvdResult r{Matrix(m, n), std::vector<double>(n), Matrix(n, n)};
    const double sigma_max = sigma[order[0]];
    const double null_cutoff =
        sigma_max * static_cast<double>(std::max(m, n)) *
        std::numeric_limits<double>::epsilon();

    std::vector<std::vector<double>> u_cols;
    u_cols.reserve(n);
    for (std::size_t out = 0; out < n; ++out) {
        std::size_t j = order[out];
        r.singular_values[out] = sigma[j];
        std::vector<double> u_col;
        if (sigma[j] > null_cutoff && sigma[j] > 0.0) {
            u_col = w.cols[j];
            for (double& x : u_col) x /= sigma[j];
        } else {
            u_col = complete_column(u_cols, m);
        }

        // Sign convention: largest-magnitude entry of the U column positive.
        std::size_t peak = 0;
        for (std::size_t i = 1; i < m; ++i) {
            if (std::abs(u_col[i]) > std::abs(u_col[peak])) peak = i;
        }
        double flip = u_col[peak] < 0.0 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < m; ++i) r.u(i, out) = flip * u_col[i];
        for (std::size_t i = 0; i < n; ++i) r.v(i, out) = flip * v[j][i];
        if (flip < 0.0) {
            for (double& x : u_col) x = -x;
        }
        u_cols.push_back(std::move(u_col));
    }
    return r;
}

}  // namespace

Matrix extend_to_orthonormal(const Matrix& u, std::size_t k) {
    if (k < u.cols()) {
        throw ShapeError("extend_to_orthonormal: target has fewer columns");
    }
    if (k > u.rows()) {
        throw ShapeError("extend_to_orthonormal: cannot exceed row count");
    }
    std::vector<std::vector<double>> cols;
    cols.reserve(k);
    for (std::size_t j = 0; j < u.cols(); ++j) {
        std::vector<double> c(u.rows());
        for (std::size_t i = 0; i < u.rows(); ++i) c[i] = u(i, j);
        cols.push_back(std::move(c));
    }
    while (cols.size() < k) {
        cols.push_back(complete_column(cols, u.rows()));
    }
    Matrix out(u.rows(), k);
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t i = 0; i < u.rows(); ++i) out(i, j) = cols[j][i];
    return out;
}

SvdResult svd(const Matrix& a) {
    for (double x : a.data()) {
        if (!std::isfinite(x)) {
            throw NumericError("svd: input has non-finite entries");
        }
    }
    if (a.rows() >= a.cols()) {
        return svd_tall(a);
    }
    SvdResult t = svd_tall(a.transposed());
    SvdResult r{std::move(t.v), std::move(t.singular_values), std::move(t.u)};
    // The sign convention is defined on U; reapply it after the swap.
    for (std::size_t j = 0; j < r.u.cols(); ++j) {
        std::size_t peak = 0;
        for (std::size_t i = 1; i < r.u.rows(); ++i) {
            if (std::abs(r.u(i, j)) > std::abs(r.u(peak, j))) peak = i;
        }
        if (r.u(peak, j) < 0.0) {
            for (std::size_t i = 0; i < r.u.rows(); ++i) r.u(i, j) = -r.u(i, j);
            for (std::size_t i = 0; i < r.v.rows(); ++i) r.v(i, j) = -r.v(i, j);
        }
    }
    return r;
}

}  // namespace dgen

// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "dgen/svd.hpp"
#include "support/oracles.hpp"

using namespace dgen;
using dgen::testing::random_matrix;

namespace {

double reconstruction_error(const Matrix& a, const SvdResult& r) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < r.singular_values.size(); ++k) {
                s += r.u(i, k) * r.singular_values[k] * r.v(j, k);
            }
            double d = a(i, j) - s;
            num += d * d;
            den += a(i, j) * a(i, j);
        }
    }
    return den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
}

double max_orthonormality_defect(const Matrix& u) {
    double worst = 0.0;
    for (std::size_t a = 0; a < u.cols(); ++a) {
        for (std::size_t b = 0; b < u.cols(); ++b) {
            double dot = 0.0;
            for (std::size_t i = 0; i < u.rows(); ++i) dot += u(i, a) * u(i, b);
            double expect = a == b ? 1.0 : 0.0;
            worst = std::max(worst, std::abs(dot - expect));
        }
    }
    return worst;
}

}  // namespace

TEST(Svd, DiagonalMatrix) {
    Matrix a(2, 2, {3.0, 0.0, 0.0, 1.0});
    SvdResult r = svd(a);
    ASSERT_EQ(r.singular_values.size(), 2u);
    EXPECT_NEAR(r.singular_values[0], 3.0, 1e-12);
    EXPECT_NEAR(r.singular_values[1], 1.0, 1e-12);
    // Sign convention makes U = V = I here.
    EXPECT_NEAR(r.u(0, 0), 1.0, 1e-12);
    EXPECT_NEAR(r.u(1, 1), 1.0, 1e-12);
    EXPECT_NEAR(r.v(0, 0), 1.0, 1e-12);
    EXPECT_NEAR(r.v(1, 1), 1.0, 1e-12);
}

TEST(Svd, RankOneMatrix) {
    Rng rng(3);
    std::vector<double> a(6), b(4);
    for (double& x : a) x = rng.normal();
    for (double& x : b) x = rng.normal();
    Matrix m(6, 4);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 4; ++j) m(i, j) = a[i] * b[j];

    SvdResult r = svd(m);
    std::size_t above = 0;
    for (double s : r.singular_values) {
        if (s > 1e-10 * r.singular_values[0]) ++above;
    }
    EXPECT_EQ(above, 1u);
    EXPECT_LT(reconstruction_error(m, r), 1e-10);
    EXPECT_LT(max_orthonormality_defect(r.u), 1e-10);
    EXPECT_LT(max_orthonormality_defect(r.v), 1e-10);
}

TEST(Svd, RandomTallAndWide) {
    Rng rng(5);
    for (auto [rows, cols] : std::vector<std::pair<std::size_t, std::size_t>>{
             {6, 4}, {4, 6}, {8, 8}, {1, 5}, {5, 1}, {12, 3}}) {
        Matrix m = random_matrix(rng, rows, cols);
        SvdResult r = svd(m);
        EXPECT_EQ(r.singular_values.size(), std::min(rows, cols));
        EXPECT_LT(reconstruction_error(m, r), 1e-10) << rows << "x" << cols;
        EXPECT_LT(max_orthonormality_defect(r.u), 1e-10);
        EXPECT_LT(max_orthonormality_defect(r.v), 1e-10);
        for (std::size_t k = 1; k < r.singular_values.size(); ++k) {
            EXPECT_GE(r.singular_values[k - 1], r.singular_values[k]);
            EXPECT_GE(r.singular_values[k], 0.0);
        }
        // Largest-magnitude entry of every U column is positive.
        for (std::size_t j = 0; j < r.u.cols(); ++j) {
            std::size_t peak = 0;
            for (std::size_t i = 1; i < r.u.rows(); ++i) {
                if (std::abs(r.u(i, j)) > std::abs(r.u(peak, j))) peak = i;
            }
            EXPECT_GT(r.u(peak, j), 0.0);
        }
    }
}

TEST(Svd, DeterministicAcrossCalls) {
    Rng rng(7);
    Matrix m = random_matrix(rng, 7, 5);
    SvdResult a = svd(m);
    SvdResult b = svd(m);
    EXPECT_EQ(a.u, b.u);
    EXPECT_EQ(a.v, b.v);
    EXPECT_EQ(a.singular_values, b.singular_values);
}

TEST(Svd, ZeroMatrix) {
    Matrix m(4, 3);
    SvdResult r = svd(m);
    for (double s : r.singular_values) EXPECT_EQ(s, 0.0);
    EXPECT_LT(max_orthonormality_defect(r.u), 1e-12);
    EXPECT_LT(max_orthonormality_defect(r.v), 1e-12);
}

TEST(Svd, NonFiniteInputRejected) {
    Matrix m(2, 2, {1.0, 2.0, std::numeric_limits<double>::quiet_NaN(), 0.0});
    EXPECT_THROW(svd(m), NumericError);
    Matrix inf(1, 1, {std::numeric_limits<double>::infinity()});
    EXPECT_THROW(svd(inf), NumericError);
}

TEST(Svd, ExtendToOrthonormal) {
    Rng rng(11);
    Matrix m = random_matrix(rng, 5, 2);
    SvdResult r = svd(m);
    Matrix ext = extend_to_orthonormal(r.u, 5);
    EXPECT_EQ(ext.cols(), 5u);
    EXPECT_LT(max_orthonormality_defect(ext), 1e-10);
    EXPECT_THROW(extend_to_orthonormal(r.u, 6), ShapeError);
}

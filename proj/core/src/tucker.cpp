// SPDX-License-Identifier: Apache-2.0
#include "dgen/tucker.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dgen/svd.hpp"

namespace dgen {

namespace {

Matrix leading_columns(const Matrix& m, std::size_t k) {
    Matrix out(m.rows(), k);
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < k; ++j) out(i, j) = m(i, j);
    return out;
}

double relative_error(const Tensor& t, const Tensor& approx) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        double d = t[i] - approx[i];
        num += d * d;
        den += t[i] * t[i];
    }
    if (den == 0.0) return num == 0.0 ? 0.0 : 1.0;
    return std::sqrt(num / den);
}

}  // namespace

std::vector<std::size_t> TuckerFactors::ranks() const {
    return core.shape();
}

std::vector<std::size_t> TuckerFactors::full_shape() const {
    std::vector<std::size_t> shape(factors.size());
    for (std::size_t m = 0; m < factors.size(); ++m) shape[m] = factors[m].rows();
    return shape;
}

std::size_t TuckerFactors::parameter_count() const {
    std::size_t n = core.size();
    for (const Matrix& f : factors) n += f.size();
    return n;
}

TuckerFactors hosvd(const Tensor& t, const std::vector<std::size_t>& ranks) {
    if (ranks.size() != t.order()) {
        throw InvalidRank("hosvd: need one rank per mode");
    }
    for (std::size_t m = 0; m < ranks.size(); ++m) {
        if (ranks[m] == 0 || ranks[m] > t.extent(m)) {
            throw InvalidRank("hosvd: rank for mode " + std::to_string(m) +
                              " outside [1, " + std::to_string(t.extent(m)) + "]");
        }
    }

    TuckerFactors f;
    f.factors.reserve(t.order());
    for (std::size_t m = 0; m < t.order(); ++m) {
        SvdResult s = svd(unfold(t, m));
        // A wide unfolding has fewer singular vectors than the extent; pad
        // with an orthonormal completion when the rank asks for more.
        Matrix u = ranks[m] > s.u.cols() ? extend_to_orthonormal(s.u, ranks[m])
                                         : leading_columns(s.u, ranks[m]);
        f.factors.push_back(std::move(u));
    }
    Tensor core = t;
    for (std::size_t m = 0; m < t.order(); ++m) {
        core = mode_n_product(core, f.factors[m].transposed(), m);
    }
    f.core = std::move(core);
    return f;
}

Tensor reconstruct(const TuckerFactors& f) {
    if (f.factors.size() != f.core.order()) {
        throw ShapeError("reconstruct: factor count does not match core order");
    }
    Tensor t = f.core;
    for (std::size_t m = 0; m < f.factors.size(); ++m) {
        if (f.factors[m].cols() != t.extent(m)) {
            throw ShapeError("reconstruct: factor " + std::to_string(m) +
                             " does not match core rank");
        }
        t = mode_n_product(t, f.factors[m], m);
    }
    return t;
}

RankSelection select_ranks(const Tensor& t, double epsilon) {
    if (!(epsilon > 0.0) || !(epsilon < 1.0)) {
        throw ConfigError("select_ranks: epsilon must lie in (0, 1)");
    }
    const std::size_t order = t.order();
    const double norm2 = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) s += t[i] * t[i];
        return s;
    }();

    std::vector<std::vector<double>> spectra(order);
    for (std::size_t m = 0; m < order; ++m) {
        spectra[m] = svd(unfold(t, m)).singular_values;
        spectra[m].resize(t.extent(m), 0.0);  // wide unfolding: missing values are 0
    }

    // Per-mode energy rule: discard at most eps^2/M of the squared norm in
    // each mode; truncation errors of HO-SVD add at most linearly in
    // squared norm across modes.
    const double mode_budget = epsilon * epsilon / static_cast<double>(order) * norm2;
    std::vector<std::size_t> ranks(order);
    for (std::size_t m = 0; m < order; ++m) {
        const auto& sv = spectra[m];
        std::size_t extent = t.extent(m);
        std::size_t k = extent;
        double tail = 0.0;
        while (k > 1) {
            double next_tail = tail + sv[k - 1] * sv[k - 1];
            if (next_tail > mode_budget) break;
            tail = next_tail;
            --k;
        }
        // A tie across the truncation boundary keeps the extra component.
        while (k < extent && sv[k - 1] > 0.0 && sv[k - 1] == sv[k]) ++k;
        ranks[m] = k;
    }

    RankSelection sel;
    sel.budget = epsilon;
    sel.ranks = ranks;
    sel.achieved_error = relative_error(t, reconstruct(hosvd(t, sel.ranks)));
    while (sel.achieved_error > epsilon) {
        // Grow the mode whose next singular value is largest; full ranks
        // reconstruct exactly, so this terminates.
        std::size_t best_mode = order;
        double best_sv = -1.0;
        for (std::size_t m = 0; m < order; ++m) {
            if (sel.ranks[m] < t.extent(m) && spectra[m][sel.ranks[m]] > best_sv) {
                best_sv = spectra[m][sel.ranks[m]];
                best_mode = m;
            }
        }
        if (best_mode == order) break;  // already full everywhere
        ++sel.ranks[best_mode];
        sel.achieved_error = relative_error(t, reconstruct(hosvd(t, sel.ranks)));
    }
    return sel;
}

std::size_t param_count_full(const std::vector<std::size_t>& dims,
                             std::size_t source_count) {
    std::size_t n = source_count + 1;
    for (std::size_t d : dims) n *= d;
    return n;
}

std::size_t param_count_tucker(const std::vector<std::size_t>& dims,
                               const std::vector<std::size_t>& ranks,
                               std::size_t source_count) {
    if (ranks.size() != dims.size() + 1) {
        throw ShapeError("param_count_tucker: need one rank per weight dim plus "
                         "one for the domain mode");
    }
    std::size_t core = 1;
    for (std::size_t k : ranks) core *= k;
    std::size_t factors = 0;
    for (std::size_t m = 0; m < dims.size(); ++m) factors += dims[m] * ranks[m];
    return core + factors + ranks.back() * (source_count + 1);
}

Tensor stack_along_new_mode(const std::vector<Tensor>& slices) {
    if (slices.empty()) {
        throw ShapeError("stack_along_new_mode: no slices");
    }
    const std::vector<std::size_t>& base = slices.front().shape();
    for (const Tensor& s : slices) {
        if (s.shape() != base) {
            throw ShapeError("stack_along_new_mode: slices disagree on shape");
        }
    }
    std::vector<std::size_t> shape = base;
    shape.push_back(slices.size());
    Tensor out(std::move(shape));
    // Trailing mode is fastest in row-major order: interleave.
    const std::size_t n = slices.front().size();
    const std::size_t s_count = slices.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t s = 0; s < s_count; ++s) {
            out[i * s_count + s] = slices[s][i];
        }
    }
    return out;
}

TuckerFactors factorize(const Tensor& t, double epsilon) {
    RankSelection sel = select_ranks(t, epsilon);
    return hosvd(t, sel.ranks);
}

TuckerFactors init_from_stack(const std::vector<Tensor>& per_domain,
                              const Tensor& agnostic, double epsilon) {
    std::vector<Tensor> slices = per_domain;
    slices.push_back(agnostic);
    return factorize(stack_along_new_mode(slices), epsilon);
}

}  // namespace dgen

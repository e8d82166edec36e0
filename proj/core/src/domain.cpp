// SPDX-License-Identifier: Apache-2.0
#include "dgen/domain.hpp"

#include <cmath>
#include <string>

#include "dgen/rng.hpp"

namespace dgen {

DomainDescriptor encode_domain(std::size_t domain, std::size_t source_count,
                               double rho) {
    if (source_count == 0) {
        throw InvalidDomain("encode_domain: need at least one source domain");
    }
    if (domain >= source_count) {
        throw InvalidDomain("encode_domain: domain " + std::to_string(domain) +
                            " out of range for " + std::to_string(source_count) +
                            " sources");
    }
    if (!(rho > 0.0)) {
        throw ConfigError("encode_domain: rho must be positive");
    }
    DomainDescriptor d;
    d.values.assign(source_count + 1, 0.0);
    d.values[domain] = rho;
    d.values[source_count] = 1.0;
    d.kind = DescriptorKind::kTwoHot;
    d.domain = domain;
    d.rho = rho;
    return d;
}

DomainDescriptor agnostic_descriptor(std::size_t source_count) {
    if (source_count == 0) {
        throw InvalidDomain("agnostic_descriptor: need at least one source domain");
    }
    DomainDescriptor d;
    d.values.assign(source_count + 1, 0.0);
    d.values[source_count] = 1.0;
    d.kind = DescriptorKind::kAgnosticOnly;
    return d;
}

namespace {

std::vector<std::size_t> shape_of(const std::variant<FcShape, Conv2dShape>& ls) {
    if (const auto* fc = std::get_if<FcShape>(&ls)) {
        return {fc->inputs, fc->outputs};
    }
    const auto& cv = std::get<Conv2dShape>(ls);
    return {cv.kernel_h, cv.kernel_w, cv.in_depth, cv.filters};
}

const Tensor& full_tensor(const WeightGenerator& gen) {
    return std::get<Tensor>(gen.form);
}

const TuckerFactors& factors_of(const WeightGenerator& gen) {
    return std::get<TuckerFactors>(gen.form);
}

}  // namespace

std::size_t WeightGenerator::source_count() const {
    if (factored()) {
        const TuckerFactors& f = std::get<TuckerFactors>(form);
        return f.factors.back().rows() - 1;
    }
    const Tensor& t = std::get<Tensor>(form);
    return t.shape().back() - 1;
}

std::size_t WeightGenerator::output_count() const {
    if (const auto* fc = std::get_if<FcShape>(&layer_shape)) return fc->outputs;
    return std::get<Conv2dShape>(layer_shape).filters;
}

std::vector<std::size_t> WeightGenerator::weight_shape() const {
    return shape_of(layer_shape);
}

std::size_t WeightGenerator::parameter_count() const {
    std::size_t n = bias_table.size();
    if (factored()) {
        n += std::get<TuckerFactors>(form).parameter_count();
    } else {
        n += std::get<Tensor>(form).size();
    }
    return n;
}

void validate(const WeightGenerator& gen) {
    std::vector<std::size_t> expected = gen.weight_shape();
    expected.push_back(gen.source_count() + 1);
    std::vector<std::size_t> actual =
        gen.factored() ? factors_of(gen).full_shape() : full_tensor(gen).shape();
    if (actual != expected) {
        throw ShapeError("weight generator: parameter tensor shape does not match "
                         "the layer shape plus domain mode");
    }
    if (gen.factored()) {
        const TuckerFactors& f = factors_of(gen);
        if (f.factors.size() != f.core.order()) {
            throw ShapeError("weight generator: factor count does not match core");
        }
        for (std::size_t m = 0; m < f.factors.size(); ++m) {
            if (f.factors[m].cols() != f.core.extent(m)) {
                throw ShapeError("weight generator: factor/core rank mismatch");
            }
        }
    }
    if (gen.bias_table.rows() != gen.source_count() + 1 ||
        gen.bias_table.cols() != gen.output_count()) {
        throw ShapeError("weight generator: bias table must be (S+1) x outputs");
    }
}

ConcreteWeights generate(const WeightGenerator& gen, const DomainDescriptor& z) {
    const std::size_t s1 = gen.source_count() + 1;
    if (z.values.size() != s1) {
        throw ShapeError("generate: descriptor length does not match domain mode");
    }
    ConcreteWeights out;
    if (!gen.factored()) {
        const Tensor& w = full_tensor(gen);
        out.weights = mode_n_vec_product(w, z.values, w.order() - 1);
    } else {
        const TuckerFactors& f = factors_of(gen);
        const std::size_t last = f.core.order() - 1;
        // Factor-first: contract z into the trailing factor, then expand.
        std::vector<double> v = matvec_transposed(f.factors[last], z.values);
        Tensor t = mode_n_vec_product(f.core, v, last);
        for (std::size_t m = 0; m < last; ++m) {
            t = mode_n_product(t, f.factors[m], m);
        }
        out.weights = std::move(t);
    }
    out.bias = matvec_transposed(gen.bias_table, z.values);
    return out;
}

std::vector<double> undo_bias_linear(const Matrix& stacked,
                                     std::span<const double> z) {
    return matvec(stacked, z);
}

namespace {

double fan_in_of(const std::variant<FcShape, Conv2dShape>& ls) {
    if (const auto* fc = std::get_if<FcShape>(&ls)) {
        return static_cast<double>(fc->inputs);
    }
    const auto& cv = std::get<Conv2dShape>(ls);
    return static_cast<double>(cv.kernel_h * cv.kernel_w * cv.in_depth);
}

}  // namespace

WeightGenerator make_full_generator(std::variant<FcShape, Conv2dShape> layer_shape,
                                    std::size_t source_count, Rng& rng) {
    if (source_count == 0) {
        throw InvalidDomain("make_full_generator: need at least one source domain");
    }
    WeightGenerator gen;
    gen.layer_shape = layer_shape;
    const double scale = std::sqrt(6.0 / fan_in_of(layer_shape));

    std::vector<std::size_t> shape = shape_of(layer_shape);
    const std::size_t s1 = source_count + 1;
    shape.push_back(s1);
    Tensor w(shape);
    // Storage order: the domain mode is fastest, so each group of S+1
    // values covers slices 0..S of one weight coordinate.
    for (std::size_t i = 0; i < w.size(); ++i) {
        std::size_t slice = i % s1;
        double a = slice + 1 == s1 ? scale : 0.1 * scale;
        w[i] = rng.uniform(-a, a);
    }
    gen.form = std::move(w);
    gen.bias_table = Matrix(s1, gen.output_count());
    return gen;
}

WeightGenerator make_factored_generator(std::variant<FcShape, Conv2dShape> layer_shape,
                                        std::size_t source_count, double epsilon,
                                        Rng& rng) {
    WeightGenerator gen = make_full_generator(layer_shape, source_count, rng);
    gen.form = factorize(std::get<Tensor>(gen.form), epsilon);
    return gen;
}

ConcreteWeights make_plain_weights(const std::variant<FcShape, Conv2dShape>& layer_shape,
                                   Rng& rng) {
    const double scale = std::sqrt(6.0 / fan_in_of(layer_shape));
    Tensor w(shape_of(layer_shape));
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-scale, scale);
    std::size_t outputs = std::holds_alternative<FcShape>(layer_shape)
                              ? std::get<FcShape>(layer_shape).outputs
                              : std::get<Conv2dShape>(layer_shape).filters;
    return ConcreteWeights{std::move(w), std::vector<double>(outputs, 0.0)};
}

GeneratorGrads GeneratorGrads::zeros_like(const WeightGenerator& gen) {
    GeneratorGrads g;
    if (gen.factored()) {
        const TuckerFactors& f = std::get<TuckerFactors>(gen.form);
        TuckerFactors zero;
        zero.core = Tensor(f.core.shape());
        for (const Matrix& u : f.factors) zero.factors.emplace_back(u.rows(), u.cols());
        g.factored = std::move(zero);
    } else {
        g.full = Tensor(std::get<Tensor>(gen.form).shape());
    }
    g.bias_table = Matrix(gen.bias_table.rows(), gen.bias_table.cols());
    return g;
}

void accumulate_generation_grads(const WeightGenerator& gen,
                                 const DomainDescriptor& z,
                                 const Tensor& weight_grad,
                                 std::span<const double> bias_grad,
                                 GeneratorGrads& out) {
    const std::size_t s1 = gen.source_count() + 1;
    if (z.values.size() != s1) {
        throw ShapeError("generation grads: descriptor length mismatch");
    }
    if (weight_grad.shape() != gen.weight_shape()) {
        throw ShapeError("generation grads: weight gradient shape mismatch");
    }

    // Bias table: bias = z^T B, so dB[s, :] += z_s * dbias.
    for (std::size_t s = 0; s < s1; ++s) {
        double zs = z.values[s];
        if (zs == 0.0) continue;
        for (std::size_t c = 0; c < out.bias_table.cols(); ++c) {
            out.bias_table(s, c) += zs * bias_grad[c];
        }
    }

    if (!gen.factored()) {
        // W = sum_s z_s * full[..., s]; trailing mode is fastest in memory.
        Tensor& acc = *out.full;
        const std::size_t n = weight_grad.size();
        for (std::size_t s = 0; s < s1; ++s) {
            double zs = z.values[s];
            if (zs == 0.0) continue;
            for (std::size_t i = 0; i < n; ++i) {
                acc[i * s1 + s] += zs * weight_grad[i];
            }
        }
        return;
    }

    const TuckerFactors& f = factors_of(gen);
    TuckerFactors& acc = *out.factored;
    const std::size_t last = f.core.order() - 1;
    const std::size_t k_last = f.core.extent(last);

    // Forward was W = (core x_last v) x_0 U_0 ... x_{last-1} U_{last-1},
    // with v = U_last^T z.
    std::vector<double> v = matvec_transposed(f.factors[last], z.values);

    // Core gradient: project the weight gradient onto every leading factor
    // and take the outer product with v along the trailing mode.
    Tensor projected = weight_grad;
    for (std::size_t m = 0; m < last; ++m) {
        projected = mode_n_product(projected, f.factors[m].transposed(), m);
    }
    for (std::size_t i = 0; i < projected.size(); ++i) {
        for (std::size_t k = 0; k < k_last; ++k) {
            acc.core[i * k_last + k] += projected[i] * v[k];
        }
    }

    // Leading factors: dU_m = unfold(dW, m) * unfold(Q_m, m)^T where Q_m is
    // the core contracted with v and every other leading factor.
    for (std::size_t m = 0; m < last; ++m) {
        Tensor q = mode_n_vec_product(f.core, v, last);
        for (std::size_t j = 0; j < last; ++j) {
            if (j == m) continue;
            q = mode_n_product(q, f.factors[j], j);
        }
        Matrix dw_m = unfold(weight_grad, m);
        Matrix q_m = unfold(q, m);
        Matrix du = matmul(dw_m, q_m.transposed());
        Matrix& target = acc.factors[m];
        for (std::size_t i = 0; i < du.size(); ++i) {
            target.data()[i] += du.data()[i];
        }
    }

    // Trailing factor: dv[k] = <dW, R[..., k]> with R the core expanded in
    // every leading mode; then dU_last = z (outer) dv.
    Tensor r = f.core;
    for (std::size_t m = 0; m < last; ++m) {
        r = mode_n_product(r, f.factors[m], m);
    }
    std::vector<double> dv(k_last, 0.0);
    for (std::size_t i = 0; i < weight_grad.size(); ++i) {
        double g = weight_grad[i];
        if (g == 0.0) continue;
        for (std::size_t k = 0; k < k_last; ++k) {
            dv[k] += g * r[i * k_last + k];
        }
    }
    Matrix& u_last = acc.factors[last];
    for (std::size_t s = 0; s < s1; ++s) {
        double zs = z.values[s];
        if (zs == 0.0) continue;
        for (std::size_t k = 0; k < k_last; ++k) {
            u_last(s, k) += zs * dv[k];
        }
    }
}

}  // namespace dgen

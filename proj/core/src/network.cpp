// SPDX-License-Identifier: Apache-2.0
#include "dgen/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dgen/rng.hpp"

namespace dgen {

namespace {

std::size_t element_count(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return n;
}

// Output shape of a layer given its input shape; validates consistency.
std::vector<std::size_t> output_shape(const Layer& layer,
                                      const std::vector<std::size_t>& in) {
    switch (layer.kind) {
        case LayerKind::kRelu:
        case LayerKind::kSoftmaxXent:
            return in;
        case LayerKind::kFc: {
            const auto& ws = layer.generator ? layer.generator->weight_shape()
                                             : layer.plain->weights.shape();
            if (ws.size() != 2) throw ShapeError("fc layer: weights must be order 2");
            if (element_count(in) != ws[0]) {
                throw ShapeError("fc layer: input size " +
                                 std::to_string(element_count(in)) +
                                 " does not match weight rows " + std::to_string(ws[0]));
            }
            return {ws[1]};
        }
        case LayerKind::kConv2d: {
            const auto& ws = layer.generator ? layer.generator->weight_shape()
                                             : layer.plain->weights.shape();
            if (ws.size() != 4) throw ShapeError("conv layer: weights must be order 4");
            if (in.size() != 3) throw ShapeError("conv layer: input must be order 3");
            if (in[2] != ws[2]) throw ShapeError("conv layer: depth mismatch");
            if (in[0] < ws[0] || in[1] < ws[1]) {
                throw ShapeError("conv layer: kernel larger than input");
            }
            // Valid padding, stride 1.
            return {in[0] - ws[0] + 1, in[1] - ws[1] + 1, ws[3]};
        }
    }
    throw ShapeError("unknown layer kind");
}

struct Materialized {
    // One entry per layer; weightless layers hold no value. References into
    // plain layers are copies for uniform ownership (desk scale).
    std::vector<std::optional<ConcreteWeights>> weights;
};

Materialized materialize(const Network& net, const DomainDescriptor* z) {
    DomainDescriptor agnostic;
    bool need_agnostic = false;
    for (const Layer& l : net.layers) {
        if (l.generator && z == nullptr) need_agnostic = true;
    }
    if (need_agnostic) agnostic = agnostic_descriptor(net.source_count);

    Materialized m;
    m.weights.resize(net.layers.size());
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const Layer& l = net.layers[i];
        if (!l.weight_bearing()) continue;
        if (l.generator) {
            m.weights[i] = generate(*l.generator, z ? *z : agnostic);
        } else if (l.plain) {
            m.weights[i] = *l.plain;
        } else {
            throw ShapeError("weight-bearing layer without weights");
        }
    }
    return m;
}

// Forward through one layer; `in` is consumed.
Tensor apply_layer(const Layer& layer, const ConcreteWeights* w, Tensor in) {
    switch (layer.kind) {
        case LayerKind::kRelu: {
            for (std::size_t i = 0; i < in.size(); ++i) {
                if (in[i] < 0.0) in[i] = 0.0;
            }
            return in;
        }
        case LayerKind::kSoftmaxXent:
            return in;  // loss head; scores pass through
        case LayerKind::kFc: {
            const Tensor& weights = w->weights;
            const std::size_t h = weights.extent(0);
            const std::size_t c = weights.extent(1);
            if (in.size() != h) throw ShapeError("fc forward: input length mismatch");
            Tensor out({c});
            for (std::size_t j = 0; j < c; ++j) out[j] = w->bias[j];
            for (std::size_t i = 0; i < h; ++i) {
                double xi = in[i];
                if (xi == 0.0) continue;
                const double* row = weights.data().data() + i * c;
                for (std::size_t j = 0; j < c; ++j) out[j] += xi * row[j];
            }
            return out;
        }
        case LayerKind::kConv2d: {
            const Tensor& k = w->weights;  // (kh, kw, depth, filters)
            const std::size_t kh = k.extent(0), kw = k.extent(1);
            const std::size_t depth = k.extent(2), filters = k.extent(3);
            const std::size_t hi = in.extent(0), wi = in.extent(1);
            if (in.extent(2) != depth) throw ShapeError("conv forward: depth mismatch");
            const std::size_t ho = hi - kh + 1, wo = wi - kw + 1;
            Tensor out({ho, wo, filters});
            for (std::size_t r = 0; r < ho; ++r) {
                for (std::size_t s = 0; s < wo; ++s) {
                    double* acc = out.data().data() + (r * wo + s) * filters;
                    for (std::size_t f = 0; f < filters; ++f) acc[f] = w->bias[f];
                    for (std::size_t a = 0; a < kh; ++a) {
                        for (std::size_t b = 0; b < kw; ++b) {
                            const double* px =
                                in.data().data() + ((r + a) * wi + (s + b)) * depth;
                            const double* pk = k.data().data() + (a * kw + b) * depth * filters;
                            for (std::size_t d = 0; d < depth; ++d) {
                                double xv = px[d];
                                if (xv == 0.0) continue;
                                const double* krow = pk + d * filters;
                                for (std::size_t f = 0; f < filters; ++f) {
                                    acc[f] += xv * krow[f];
                                }
                            }
                        }
                    }
                }
            }
            return out;
        }
    }
    throw ShapeError("unknown layer kind");
}

Tensor reshape_for(const Layer& layer, Tensor in) {
    // FC layers accept any shape by flattening.
    if (layer.kind == LayerKind::kFc && in.order() != 1) {
        const std::size_t n = in.size();
        std::vector<double> data(in.data().begin(), in.data().end());
        return Tensor({n}, std::move(data));
    }
    return in;
}

struct SoftmaxXentResult {
    double loss = 0.0;
    std::vector<double> dscores;
};

std::size_t correct_count(const Network& net, std::span<const Instance> instances,
                          const DomainDescriptor* z);

SoftmaxXentResult softmax_xent(std::span<const double> scores, std::uint32_t label) {
    const std::size_t c = scores.size();
    double mx = scores[0];
    for (double s : scores) mx = std::max(mx, s);
    double sum = 0.0;
    std::vector<double> p(c);
    for (std::size_t j = 0; j < c; ++j) {
        p[j] = std::exp(scores[j] - mx);
        sum += p[j];
    }
    SoftmaxXentResult r;
    r.dscores.resize(c);
    for (std::size_t j = 0; j < c; ++j) {
        p[j] /= sum;
        r.dscores[j] = p[j];
    }
    r.loss = -std::log(p[label]);
    r.dscores[label] -= 1.0;
    return r;
}

}  // namespace

bool Network::concrete() const {
    for (const Layer& l : layers) {
        if (l.generator) return false;
    }
    return true;
}

void validate(const Network& net) {
    if (net.class_count == 0) throw ConfigError("network: class_count must be >= 1");
    if (net.input_shape.empty()) throw ShapeError("network: input shape is empty");
    std::vector<std::size_t> shape = net.input_shape;
    for (const Layer& l : net.layers) {
        if (l.weight_bearing()) {
            if (static_cast<bool>(l.generator) == static_cast<bool>(l.plain)) {
                throw ShapeError("network: weight-bearing layer needs exactly one "
                                 "of generator/plain");
            }
            if (l.generator) {
                dgen::validate(*l.generator);
                if (l.generator->source_count() != net.source_count) {
                    throw ShapeError("network: generator domain mode disagrees with S");
                }
            }
        } else if (l.generator || l.plain) {
            throw ShapeError("network: weightless layer must not carry weights");
        }
        if (l.kind == LayerKind::kFc && shape.size() != 1) {
            shape = {element_count(shape)};
        }
        shape = output_shape(l, shape);
    }
    if (shape != std::vector<std::size_t>{net.class_count}) {
        throw ShapeError("network: final layer must emit class_count scores");
    }
}

std::vector<double> forward(const Network& net, const Tensor& x,
                            const DomainDescriptor* z) {
    if (x.shape() != net.input_shape) {
        throw ShapeError("forward: input shape mismatch");
    }
    Materialized m = materialize(net, z);
    Tensor t = x;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        t = reshape_for(net.layers[i], std::move(t));
        t = apply_layer(net.layers[i], m.weights[i] ? &*m.weights[i] : nullptr,
                        std::move(t));
    }
    return std::vector<double>(t.data().begin(), t.data().end());
}

std::vector<double> penultimate_features(const Network& net, const Tensor& x,
                                         const DomainDescriptor* z) {
    if (x.shape() != net.input_shape) {
        throw ShapeError("penultimate_features: input shape mismatch");
    }
    std::size_t last_weighted = net.layers.size();
    for (std::size_t i = net.layers.size(); i-- > 0;) {
        if (net.layers[i].weight_bearing()) {
            last_weighted = i;
            break;
        }
    }
    if (last_weighted == net.layers.size()) {
        throw ConfigError("penultimate_features: network has no weight layer");
    }
    Materialized m = materialize(net, z);
    Tensor t = x;
    for (std::size_t i = 0; i < last_weighted; ++i) {
        t = reshape_for(net.layers[i], std::move(t));
        t = apply_layer(net.layers[i], m.weights[i] ? &*m.weights[i] : nullptr,
                        std::move(t));
    }
    return std::vector<double>(t.data().begin(), t.data().end());
}

NetworkGrads make_zero_grads(const Network& net) {
    NetworkGrads g;
    g.layers.resize(net.layers.size());
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const Layer& l = net.layers[i];
        if (!l.weight_bearing() || !l.trainable) continue;
        if (l.generator) {
            g.layers[i].generator = GeneratorGrads::zeros_like(*l.generator);
        } else {
            g.layers[i].plain = ConcreteWeights{
                Tensor(l.plain->weights.shape()),
                std::vector<double>(l.plain->bias.size(), 0.0)};
        }
    }
    return g;
}

namespace {

// Backward through one layer. `dx_out` receives the gradient wrt the layer
// input; weight gradients accumulate into `dw` when present.
Tensor backward_layer(const Layer& layer, const ConcreteWeights* w,
                      const Tensor& input, Tensor dout, ConcreteWeights* dw) {
    switch (layer.kind) {
        case LayerKind::kRelu: {
            Tensor dx = std::move(dout);
            for (std::size_t i = 0; i < dx.size(); ++i) {
                if (input[i] <= 0.0) dx[i] = 0.0;
            }
            return dx;
        }
        case LayerKind::kSoftmaxXent:
            return dout;
        case LayerKind::kFc: {
            const Tensor& weights = w->weights;
            const std::size_t h = weights.extent(0);
            const std::size_t c = weights.extent(1);
            Tensor dx({h});
            for (std::size_t i = 0; i < h; ++i) {
                const double* row = weights.data().data() + i * c;
                double s = 0.0;
                for (std::size_t j = 0; j < c; ++j) s += row[j] * dout[j];
                dx[i] = s;
            }
            if (dw) {
                for (std::size_t i = 0; i < h; ++i) {
                    double xi = input[i];
                    if (xi != 0.0) {
                        double* grow = dw->weights.data().data() + i * c;
                        for (std::size_t j = 0; j < c; ++j) grow[j] += xi * dout[j];
                    }
                }
                for (std::size_t j = 0; j < c; ++j) dw->bias[j] += dout[j];
            }
            return dx;
        }
        case LayerKind::kConv2d: {
            const Tensor& k = w->weights;
            const std::size_t kh = k.extent(0), kw = k.extent(1);
            const std::size_t depth = k.extent(2), filters = k.extent(3);
            const std::size_t hi = input.extent(0), wi = input.extent(1);
            const std::size_t ho = hi - kh + 1, wo = wi - kw + 1;
            Tensor dx(input.shape());
            for (std::size_t r = 0; r < ho; ++r) {
                for (std::size_t s = 0; s < wo; ++s) {
                    const double* dacc = dout.data().data() + (r * wo + s) * filters;
                    for (std::size_t a = 0; a < kh; ++a) {
                        for (std::size_t b = 0; b < kw; ++b) {
                            const double* px =
                                input.data().data() + ((r + a) * wi + (s + b)) * depth;
                            double* pdx =
                                dx.data().data() + ((r + a) * wi + (s + b)) * depth;
                            const double* pk =
                                k.data().data() + (a * kw + b) * depth * filters;
                            double* pdk =
                                dw ? dw->weights.data().data() + (a * kw + b) * depth * filters
                                   : nullptr;
                            for (std::size_t d = 0; d < depth; ++d) {
                                const double* krow = pk + d * filters;
                                double sum = 0.0;
                                for (std::size_t f = 0; f < filters; ++f) {
                                    sum += krow[f] * dacc[f];
                                }
                                pdx[d] += sum;
                                if (pdk) {
                                    double xv = px[d];
                                    if (xv != 0.0) {
                                        double* grow = pdk + d * filters;
                                        for (std::size_t f = 0; f < filters; ++f) {
                                            grow[f] += xv * dacc[f];
                                        }
                                    }
                                }
                            }
                        }
                    }
                    if (dw) {
                        for (std::size_t f = 0; f < filters; ++f) {
                            dw->bias[f] += dacc[f];
                        }
                    }
                }
            }
            return dx;
        }
    }
    throw ShapeError("unknown layer kind");
}

}  // namespace

double loss_and_grads(const Network& net, std::span<const DomainBatch> batch,
                      double rho, NetworkGrads& grads) {
    if (batch.empty()) throw EmptyBatch("loss_and_grads: no domain batches");
    for (const DomainBatch& db : batch) {
        if (db.instances.empty()) {
            throw EmptyBatch("loss_and_grads: empty batch for domain " +
                             std::to_string(db.domain));
        }
    }
    if (grads.layers.size() != net.layers.size()) {
        throw ShapeError("loss_and_grads: gradient buffers do not match network");
    }
    const bool parameterized = !net.concrete();
    const double domain_weight = 1.0 / static_cast<double>(batch.size());

    double total_loss = 0.0;
    for (const DomainBatch& db : batch) {
        DomainDescriptor z;
        if (parameterized) z = encode_domain(db.domain, net.source_count, rho);
        Materialized m = materialize(net, parameterized ? &z : nullptr);

        // Per-domain accumulators over the generated concrete weights; they
        // chain into the shared parameters once per domain.
        std::vector<std::optional<ConcreteWeights>> dws(net.layers.size());
        for (std::size_t i = 0; i < net.layers.size(); ++i) {
            const Layer& l = net.layers[i];
            if (!l.weight_bearing() || !l.trainable) continue;
            dws[i] = ConcreteWeights{Tensor(m.weights[i]->weights.shape()),
                                     std::vector<double>(m.weights[i]->bias.size(), 0.0)};
        }

        const double w = domain_weight / static_cast<double>(db.instances.size());
        double domain_loss = 0.0;
        for (const Instance* inst : db.instances) {
            if (inst->label >= net.class_count) {
                throw LabelSpaceError("loss_and_grads: label out of range");
            }
            // Forward, keeping each layer's (reshaped) input. Backward works
            // on flat data, so no reshape bookkeeping is needed on the way
            // down: element counts line up by construction.
            std::vector<Tensor> inputs(net.layers.size());
            Tensor t = inst->x;
            for (std::size_t i = 0; i < net.layers.size(); ++i) {
                t = reshape_for(net.layers[i], std::move(t));
                inputs[i] = t;
                t = apply_layer(net.layers[i], m.weights[i] ? &*m.weights[i] : nullptr,
                                std::move(t));
            }
            SoftmaxXentResult head = softmax_xent(t.data(), inst->label);
            domain_loss += head.loss;

            Tensor dout({net.class_count}, std::move(head.dscores));
            for (double& g : dout.data()) g *= w;
            for (std::size_t i = net.layers.size(); i-- > 0;) {
                dout = backward_layer(net.layers[i],
                                      m.weights[i] ? &*m.weights[i] : nullptr,
                                      inputs[i], std::move(dout),
                                      dws[i] ? &*dws[i] : nullptr);
            }
        }
        total_loss += domain_weight * domain_loss /
                      static_cast<double>(db.instances.size());

        for (std::size_t i = 0; i < net.layers.size(); ++i) {
            if (!dws[i]) continue;
            const Layer& l = net.layers[i];
            if (l.generator) {
                accumulate_generation_grads(*l.generator, z, dws[i]->weights,
                                            dws[i]->bias, *grads.layers[i].generator);
            } else {
                ConcreteWeights& acc = *grads.layers[i].plain;
                for (std::size_t j = 0; j < acc.weights.size(); ++j) {
                    acc.weights[j] += dws[i]->weights[j];
                }
                for (std::size_t j = 0; j < acc.bias.size(); ++j) {
                    acc.bias[j] += dws[i]->bias[j];
                }
            }
        }
    }
    return total_loss;
}

std::vector<std::span<double>> parameter_spans(Network& net) {
    std::vector<std::span<double>> spans;
    for (Layer& l : net.layers) {
        if (!l.weight_bearing() || !l.trainable) continue;
        if (l.generator) {
            if (l.generator->factored()) {
                TuckerFactors& f = std::get<TuckerFactors>(l.generator->form);
                spans.push_back(f.core.data());
                for (Matrix& u : f.factors) spans.push_back(u.data());
            } else {
                spans.push_back(std::get<Tensor>(l.generator->form).data());
            }
            spans.push_back(l.generator->bias_table.data());
        } else {
            spans.push_back(l.plain->weights.data());
            spans.push_back(std::span<double>(l.plain->bias));
        }
    }
    return spans;
}

std::vector<std::span<double>> gradient_spans(const Network& net,
                                              NetworkGrads& grads) {
    std::vector<std::span<double>> spans;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const Layer& l = net.layers[i];
        if (!l.weight_bearing() || !l.trainable) continue;
        LayerGrads& g = grads.layers[i];
        if (l.generator) {
            GeneratorGrads& gg = *g.generator;
            if (gg.factored) {
                spans.push_back(gg.factored->core.data());
                for (Matrix& u : gg.factored->factors) spans.push_back(u.data());
            } else {
                spans.push_back(gg.full->data());
            }
            spans.push_back(gg.bias_table.data());
        } else {
            spans.push_back(g.plain->weights.data());
            spans.push_back(std::span<double>(g.plain->bias));
        }
    }
    return spans;
}

TrainReport train(Network& net, const MultiDomainDataset& data,
                  const TrainConfig& cfg) {
    validate(net);
    for (const Domain& dom : data.domains) {
        for (const Instance& inst : dom.instances) {
            if (inst.label >= net.class_count) {
                throw LabelSpaceError("train: label outside the network's classes");
            }
        }
    }
    if (data.input_shape != net.input_shape) {
        throw ShapeError("train: dataset input shape does not match network");
    }
    const bool parameterized = !net.concrete();
    if (parameterized && data.domain_count() != net.source_count) {
        throw ShapeError("train: dataset domain count does not match S");
    }

    SplitDataset split = split_train_val(data, cfg.val_fraction, cfg.seed);
    Rng sampler(derive_seed(cfg.seed, 0xba7c4e5ULL));

    std::vector<std::span<double>> params = parameter_spans(net);
    std::vector<std::vector<double>> velocity(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        velocity[i].assign(params[i].size(), 0.0);
    }

    // Validation instances come from source domains, so they are scored with
    // their own domain's 2-hot descriptor; the agnostic descriptor is only
    // used at extraction time.
    auto validation_accuracy = [&]() {
        std::size_t correct = 0;
        std::size_t total = 0;
        for (std::size_t d = 0; d < split.val.domains.size(); ++d) {
            const Domain& dom = split.val.domains[d];
            DomainDescriptor z;
            const DomainDescriptor* zp = nullptr;
            if (parameterized) {
                z = encode_domain(d, net.source_count, cfg.rho);
                zp = &z;
            }
            correct += correct_count(net, dom.instances, zp);
            total += dom.instances.size();
        }
        return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
    };

    TrainReport report;
    report.best = net;
    report.best_iteration = 0;
    report.best_val_accuracy = validation_accuracy();
    report.val_curve.push_back({0, report.best_val_accuracy});

    NetworkGrads grads = make_zero_grads(net);
    std::vector<std::span<double>> gspans = gradient_spans(net, grads);

    for (std::size_t it = 1; it <= cfg.max_iterations; ++it) {
        // Equal-size per-domain batches realize the per-domain mean weights.
        std::vector<DomainBatch> batch;
        batch.reserve(split.train.domains.size());
        for (std::size_t d = 0; d < split.train.domains.size(); ++d) {
            const Domain& dom = split.train.domains[d];
            if (dom.instances.empty()) {
                throw EmptyBatch("train: domain " + dom.name + " has no training data");
            }
            DomainBatch db;
            db.domain = d;
            db.instances.reserve(cfg.batch_size);
            for (std::size_t j = 0; j < cfg.batch_size; ++j) {
                db.instances.push_back(&dom.instances[sampler.index(dom.instances.size())]);
            }
            batch.push_back(std::move(db));
        }

        for (std::span<double> g : gspans) {
            std::fill(g.begin(), g.end(), 0.0);
        }
        double loss = loss_and_grads(net, batch, cfg.rho, grads);
        report.loss_curve.push_back(loss);

        for (std::size_t p = 0; p < params.size(); ++p) {
            std::span<double> w = params[p];
            std::span<double> g = gspans[p];
            std::vector<double>& v = velocity[p];
            for (std::size_t j = 0; j < w.size(); ++j) {
                double grad = g[j] + cfg.weight_decay * w[j];
                v[j] = cfg.momentum * v[j] - cfg.learning_rate * grad;
                w[j] += v[j];
            }
        }

        if ((cfg.val_every > 0 && it % cfg.val_every == 0) || it == cfg.max_iterations) {
            double acc = validation_accuracy();
            report.val_curve.push_back({it, acc});
            if (acc > report.best_val_accuracy) {
                report.best_val_accuracy = acc;
                report.best_iteration = it;
                report.best = net;
            }
        }
    }
    return report;
}

Network extract_agnostic(const Network& net) {
    Network out;
    out.class_count = net.class_count;
    out.input_shape = net.input_shape;
    out.source_count = 0;
    DomainDescriptor z;
    if (!net.concrete()) z = agnostic_descriptor(net.source_count);
    out.layers.reserve(net.layers.size());
    for (const Layer& l : net.layers) {
        Layer nl;
        nl.kind = l.kind;
        nl.trainable = l.trainable;
        if (l.generator) {
            nl.plain = generate(*l.generator, z);
        } else if (l.plain) {
            nl.plain = *l.plain;
        }
        out.layers.push_back(std::move(nl));
    }
    return out;
}

namespace {

// Integer correct-count so accuracy aggregation is order-independent.
std::size_t correct_count(const Network& net, std::span<const Instance> instances,
                          const DomainDescriptor* z) {
    Materialized m = materialize(net, z);
    std::size_t correct = 0;
    for (const Instance& inst : instances) {
        Tensor t = inst.x;
        for (std::size_t i = 0; i < net.layers.size(); ++i) {
            t = reshape_for(net.layers[i], std::move(t));
            t = apply_layer(net.layers[i], m.weights[i] ? &*m.weights[i] : nullptr,
                            std::move(t));
        }
        std::size_t best = 0;
        for (std::size_t j = 1; j < t.size(); ++j) {
            if (t[j] > t[best]) best = j;  // ties keep the lowest index
        }
        if (best == inst.label) ++correct;
    }
    return correct;
}

}  // namespace

double evaluate(const Network& net, std::span<const Instance> instances,
                const DomainDescriptor* z) {
    if (instances.empty()) return 0.0;
    return static_cast<double>(correct_count(net, instances, z)) /
           static_cast<double>(instances.size());
}

}  // namespace dgen

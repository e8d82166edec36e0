// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "dgen/network.hpp"
#include "support/oracles.hpp"

using namespace dgen;
using dgen::testing::max_abs_diff;
using dgen::testing::max_grad_rel_error;
using dgen::testing::random_tensor;
using dgen::testing::straightline_mlp_forward;

namespace {

Layer fc_full(Rng& rng, std::size_t h, std::size_t c, std::size_t s) {
    Layer l;
    l.kind = LayerKind::kFc;
    WeightGenerator gen;
    gen.layer_shape = FcShape{h, c};
    Tensor w = random_tensor(rng, {h, c, s + 1});
    for (double& v : w.data()) v *= 0.5;
    gen.form = std::move(w);
    gen.bias_table = Matrix(s + 1, c);
    for (double& v : gen.bias_table.data()) v = 0.1 * rng.normal();
    l.generator = std::move(gen);
    return l;
}

Layer conv_full(Rng& rng, std::size_t kh, std::size_t kw, std::size_t depth,
                std::size_t filters, std::size_t s) {
    Layer l;
    l.kind = LayerKind::kConv2d;
    WeightGenerator gen;
    gen.layer_shape = Conv2dShape{kh, kw, depth, filters};
    Tensor w = random_tensor(rng, {kh, kw, depth, filters, s + 1});
    for (double& v : w.data()) v *= 0.4;
    gen.form = std::move(w);
    gen.bias_table = Matrix(s + 1, filters);
    for (double& v : gen.bias_table.data()) v = 0.1 * rng.normal();
    l.generator = std::move(gen);
    return l;
}

Layer weightless(LayerKind kind) {
    Layer l;
    l.kind = kind;
    return l;
}

void factorize_layer(Layer& l, bool full_rank) {
    WeightGenerator& gen = *l.generator;
    const Tensor& w = std::get<Tensor>(gen.form);
    std::vector<std::size_t> ranks = w.shape();
    if (!full_rank) {
        for (auto& k : ranks) k = std::max<std::size_t>(1, k - 1);
    }
    gen.form = hosvd(w, ranks);
}

Network mlp_full(Rng& rng, std::size_t in, std::size_t hidden, std::size_t classes,
                 std::size_t s) {
    Network net;
    net.source_count = s;
    net.class_count = classes;
    net.input_shape = {in};
    net.layers.push_back(fc_full(rng, in, hidden, s));
    net.layers.push_back(weightless(LayerKind::kRelu));
    net.layers.push_back(fc_full(rng, hidden, classes, s));
    net.layers.push_back(weightless(LayerKind::kSoftmaxXent));
    return net;
}

MultiDomainDataset tiny_dataset(Rng& rng, std::size_t domains, std::size_t classes,
                                std::size_t dim, std::size_t per_class) {
    MultiDomainDataset d;
    d.class_count = classes;
    d.input_shape = {dim};
    for (std::size_t dom = 0; dom < domains; ++dom) {
        Domain domain;
        domain.name = "d" + std::to_string(dom);
        for (std::size_t c = 0; c < classes; ++c) {
            for (std::size_t j = 0; j < per_class; ++j) {
                Tensor x({dim});
                for (std::size_t k = 0; k < dim; ++k) {
                    x[k] = rng.normal() + (k == c % dim ? 3.0 : 0.0);
                }
                domain.instances.push_back(Instance{std::move(x),
                                                    static_cast<std::uint32_t>(c)});
            }
        }
        d.domains.push_back(std::move(domain));
    }
    return d;
}

std::vector<DomainBatch> batch_from(const MultiDomainDataset& d, std::size_t take) {
    std::vector<DomainBatch> batch;
    for (std::size_t dom = 0; dom < d.domain_count(); ++dom) {
        DomainBatch db;
        db.domain = dom;
        for (std::size_t j = 0; j < take && j < d.domains[dom].instances.size(); ++j) {
            db.instances.push_back(&d.domains[dom].instances[j]);
        }
        batch.push_back(std::move(db));
    }
    return batch;
}

}  // namespace

TEST(Forward, IdentityFcLayer) {
    const std::size_t n = 4, s = 2;
    Network net;
    net.source_count = s;
    net.class_count = n;
    net.input_shape = {n};
    Layer l;
    l.kind = LayerKind::kFc;
    WeightGenerator gen;
    gen.layer_shape = FcShape{n, n};
    Tensor w({n, n, s + 1});
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> idx{i, i, s};
        w.at(idx) = 1.0;  // shared slice = identity, domain slices = 0
    }
    gen.form = std::move(w);
    gen.bias_table = Matrix(s + 1, n);
    l.generator = std::move(gen);
    net.layers.push_back(std::move(l));

    Rng rng(301);
    Tensor x = random_tensor(rng, {n});
    DomainDescriptor z = agnostic_descriptor(s);
    std::vector<double> y = forward(net, x, &z);
    for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(y[i], x[i]);
}

TEST(Forward, ReluOnlyNetwork) {
    Network net;
    net.source_count = 0;
    net.class_count = 3;
    net.input_shape = {3};
    net.layers.push_back(weightless(LayerKind::kRelu));
    Tensor x({3}, {-1.0, 0.5, -0.2});
    std::vector<double> y = forward(net, x);
    EXPECT_EQ(y, (std::vector<double>{0.0, 0.5, 0.0}));
}

TEST(Forward, MatchesStraightLineOracle) {
    Rng rng(307);
    Network net = mlp_full(rng, 5, 4, 3, 2);
    DomainDescriptor z = encode_domain(1, 2, 0.3);

    std::vector<ConcreteWeights> mats;
    mats.push_back(generate(*net.layers[0].generator, z));
    mats.push_back(generate(*net.layers[2].generator, z));

    for (int trial = 0; trial < 10; ++trial) {
        Tensor x = random_tensor(rng, {5});
        std::vector<double> expect =
            straightline_mlp_forward(mats, {x.data().begin(), x.data().end()});
        std::vector<double> got = forward(net, x, &z);
        EXPECT_LT(max_abs_diff(expect, got), 1e-12);
    }
}

TEST(Forward, ShapeMismatchRejected) {
    Rng rng(311);
    Network net = mlp_full(rng, 5, 4, 3, 2);
    EXPECT_THROW(forward(net, Tensor({4})), ShapeError);
}

TEST(Loss, UniformScoresGiveLnC) {
    const std::size_t c = 7;
    Network net;
    net.source_count = 2;
    net.class_count = c;
    net.input_shape = {3};
    Layer l;
    l.kind = LayerKind::kFc;
    WeightGenerator gen;
    gen.layer_shape = FcShape{3, c};
    gen.form = Tensor({3, c, 3});  // all-zero weights
    gen.bias_table = Matrix(3, c);
    l.generator = std::move(gen);
    net.layers.push_back(std::move(l));
    net.layers.push_back(weightless(LayerKind::kSoftmaxXent));

    Rng rng(313);
    MultiDomainDataset d = tiny_dataset(rng, 2, c, 3, 2);
    auto batch = batch_from(d, 2);
    NetworkGrads grads = make_zero_grads(net);
    double loss = loss_and_grads(net, batch, 0.3, grads);
    EXPECT_NEAR(loss, std::log(static_cast<double>(c)), 1e-12);
}

TEST(Loss, EmptyBatchRejected) {
    Rng rng(317);
    Network net = mlp_full(rng, 4, 3, 2, 2);
    NetworkGrads grads = make_zero_grads(net);
    std::vector<DomainBatch> empty;
    EXPECT_THROW(loss_and_grads(net, empty, 0.3, grads), EmptyBatch);
    std::vector<DomainBatch> hollow(1);
    EXPECT_THROW(loss_and_grads(net, hollow, 0.3, grads), EmptyBatch);
}

TEST(Loss, FullAndFullRankFactoredAgree) {
    Rng rng(331);
    Network full_net = mlp_full(rng, 4, 5, 3, 2);
    Network fac_net = full_net;
    factorize_layer(fac_net.layers[0], /*full_rank=*/true);
    factorize_layer(fac_net.layers[2], /*full_rank=*/true);

    Rng drng(332);
    MultiDomainDataset d = tiny_dataset(drng, 2, 3, 4, 3);
    auto batch = batch_from(d, 3);
    NetworkGrads g1 = make_zero_grads(full_net);
    NetworkGrads g2 = make_zero_grads(fac_net);
    double l1 = loss_and_grads(full_net, batch, 0.3, g1);
    double l2 = loss_and_grads(fac_net, batch, 0.3, g2);
    EXPECT_NEAR(l1, l2, 1e-8);
}

TEST(Gradients, FiniteDifferenceFullFormMlp) {
    Rng rng(401);
    Network net = mlp_full(rng, 4, 5, 3, 2);
    Rng drng(402);
    MultiDomainDataset d = tiny_dataset(drng, 2, 3, 4, 2);
    auto batch = batch_from(d, 2);
    EXPECT_LT(max_grad_rel_error(net, batch, 0.3, 1e-5), 1e-4);
}

TEST(Gradients, FiniteDifferenceFactoredMlp) {
    Rng rng(403);
    Network net = mlp_full(rng, 4, 5, 3, 2);
    factorize_layer(net.layers[0], /*full_rank=*/false);
    factorize_layer(net.layers[2], /*full_rank=*/true);
    Rng drng(404);
    MultiDomainDataset d = tiny_dataset(drng, 2, 3, 4, 2);
    auto batch = batch_from(d, 2);
    EXPECT_LT(max_grad_rel_error(net, batch, 0.3, 1e-5), 1e-4);
}

TEST(Gradients, FiniteDifferenceConvNet) {
    Rng rng(405);
    Network net;
    net.source_count = 2;
    net.class_count = 3;
    net.input_shape = {5, 5, 2};
    net.layers.push_back(conv_full(rng, 3, 3, 2, 3, 2));
    net.layers.push_back(weightless(LayerKind::kRelu));
    net.layers.push_back(fc_full(rng, 27, 3, 2));
    net.layers.push_back(weightless(LayerKind::kSoftmaxXent));
    factorize_layer(net.layers[0], /*full_rank=*/false);

    MultiDomainDataset d;
    d.class_count = 3;
    d.input_shape = {5, 5, 2};
    Rng drng(406);
    for (std::size_t dom = 0; dom < 2; ++dom) {
        Domain domain;
        domain.name = "d" + std::to_string(dom);
        for (std::uint32_t c = 0; c < 3; ++c) {
            domain.instances.push_back(
                Instance{random_tensor(drng, {5, 5, 2}), c});
        }
        d.domains.push_back(std::move(domain));
    }
    auto batch = batch_from(d, 3);
    EXPECT_LT(max_grad_rel_error(net, batch, 0.3, 1e-5), 1e-4);
}

TEST(Gradients, FiniteDifferencePlainNet) {
    Rng rng(407);
    Network net;
    net.source_count = 0;
    net.class_count = 3;
    net.input_shape = {4};
    Layer l1;
    l1.kind = LayerKind::kFc;
    l1.plain = make_plain_weights(FcShape{4, 5}, rng);
    Layer l2;
    l2.kind = LayerKind::kFc;
    l2.plain = make_plain_weights(FcShape{5, 3}, rng);
    net.layers.push_back(std::move(l1));
    net.layers.push_back(weightless(LayerKind::kRelu));
    net.layers.push_back(std::move(l2));
    net.layers.push_back(weightless(LayerKind::kSoftmaxXent));

    Rng drng(408);
    MultiDomainDataset d = tiny_dataset(drng, 2, 3, 4, 2);
    auto batch = batch_from(d, 2);
    EXPECT_LT(max_grad_rel_error(net, batch, 0.3, 1e-5), 1e-4);
}

TEST(Gradients, RepeatedStepsOnFixedBatchDecreaseLoss) {
    Rng rng(409);
    Network net = mlp_full(rng, 4, 6, 3, 2);
    Rng drng(410);
    MultiDomainDataset d = tiny_dataset(drng, 2, 3, 4, 4);
    auto batch = batch_from(d, 4);

    NetworkGrads grads = make_zero_grads(net);
    auto params = parameter_spans(net);
    auto gspans = gradient_spans(net, grads);
    std::vector<std::vector<double>> vel(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) vel[i].assign(params[i].size(), 0.0);

    double prev = 1e300;
    for (int step = 0; step < 10; ++step) {
        for (auto g : gspans) std::fill(g.begin(), g.end(), 0.0);
        double loss = loss_and_grads(net, batch, 0.3, grads);
        EXPECT_LT(loss, prev);
        prev = loss;
        for (std::size_t p = 0; p < params.size(); ++p) {
            for (std::size_t j = 0; j < params[p].size(); ++j) {
                vel[p][j] = 0.9 * vel[p][j] - 1e-4 * gspans[p][j];
                params[p][j] += vel[p][j];
            }
        }
    }
}

TEST(Loss, DomainPermutationInvariance) {
    Rng rng(419);
    const std::size_t s = 3;
    Network net = mlp_full(rng, 4, 5, 3, s);
    Rng drng(420);
    MultiDomainDataset d = tiny_dataset(drng, s, 3, 4, 3);
    auto batch = batch_from(d, 3);
    NetworkGrads g0 = make_zero_grads(net);
    double base = loss_and_grads(net, batch, 0.3, g0);

    // Cycle the domains: new slice (i+1) mod s holds old slice i.
    std::vector<std::size_t> perm{1, 2, 0};
    Network permuted = net;
    for (Layer& l : permuted.layers) {
        if (!l.generator) continue;
        Tensor& w = std::get<Tensor>(l.generator->form);
        Tensor old = w;
        Matrix& bt = l.generator->bias_table;
        Matrix old_bt = bt;
        const std::size_t s1 = s + 1;
        const std::size_t lead = w.size() / s1;
        for (std::size_t i = 0; i < lead; ++i) {
            for (std::size_t dom = 0; dom < s; ++dom) {
                w[i * s1 + perm[dom]] = old[i * s1 + dom];
            }
        }
        for (std::size_t dom = 0; dom < s; ++dom) {
            for (std::size_t c = 0; c < bt.cols(); ++c) {
                bt(perm[dom], c) = old_bt(dom, c);
            }
        }
    }
    std::vector<DomainBatch> permuted_batch = batch;
    for (std::size_t dom = 0; dom < s; ++dom) {
        permuted_batch[dom].domain = perm[batch[dom].domain];
    }
    NetworkGrads g1 = make_zero_grads(permuted);
    double shuffled = loss_and_grads(permuted, permuted_batch, 0.3, g1);
    EXPECT_NEAR(base, shuffled, 1e-12);
}

TEST(Train, SeparableDataReachesHighValAccuracy) {
    SyntheticSpec spec;
    spec.class_count = 2;
    spec.domain_count = 2;
    spec.input_dim = 4;
    spec.instances_per_class = 60;
    spec.prototype_scale = 3.0;
    spec.noise_std = 0.6;
    spec.angles_deg = {0.0, 20.0};
    spec.seed = 9;
    MultiDomainDataset data = generate_synthetic(spec);

    Rng rng(421);
    Network net = mlp_full(rng, 4, 8, 2, 2);
    TrainConfig cfg;
    cfg.learning_rate = 0.01;
    cfg.batch_size = 16;
    cfg.max_iterations = 400;
    cfg.seed = 5;
    TrainReport report = train(net, data, cfg);
    EXPECT_GE(report.best_val_accuracy, 0.95);
    EXPECT_EQ(report.loss_curve.size(), cfg.max_iterations);
}

TEST(Train, ZeroLearningRateLeavesParametersBitIdentical) {
    Rng rng(431);
    Network net = mlp_full(rng, 4, 5, 3, 2);
    Rng drng(432);
    MultiDomainDataset d = tiny_dataset(drng, 2, 3, 4, 20);

    Network before = net;
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    cfg.batch_size = 4;
    cfg.max_iterations = 10;
    cfg.seed = 3;
    (void)train(net, d, cfg);

    auto pa = parameter_spans(before);
    auto pb = parameter_spans(net);
    ASSERT_EQ(pa.size(), pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
        ASSERT_EQ(pa[i].size(), pb[i].size());
        for (std::size_t j = 0; j < pa[i].size(); ++j) {
            EXPECT_EQ(pa[i][j], pb[i][j]);
        }
    }
}

TEST(Train, SameSeedSameReport) {
    Rng rng1(441);
    Network net1 = mlp_full(rng1, 4, 5, 2, 2);
    Rng rng2(441);
    Network net2 = mlp_full(rng2, 4, 5, 2, 2);
    Rng drng(442);
    MultiDomainDataset d = tiny_dataset(drng, 2, 2, 4, 15);

    TrainConfig cfg;
    cfg.batch_size = 8;
    cfg.max_iterations = 50;
    cfg.seed = 77;
    TrainReport r1 = train(net1, d, cfg);
    TrainReport r2 = train(net2, d, cfg);
    EXPECT_EQ(r1.loss_curve, r2.loss_curve);
    ASSERT_EQ(r1.val_curve.size(), r2.val_curve.size());
    for (std::size_t i = 0; i < r1.val_curve.size(); ++i) {
        EXPECT_EQ(r1.val_curve[i].iteration, r2.val_curve[i].iteration);
        EXPECT_EQ(r1.val_curve[i].accuracy, r2.val_curve[i].accuracy);
    }
    EXPECT_EQ(r1.best_iteration, r2.best_iteration);
}

TEST(Train, InconsistentLabelsRejected) {
    Rng rng(443);
    Network net = mlp_full(rng, 4, 5, 2, 2);
    Rng drng(444);
    MultiDomainDataset d = tiny_dataset(drng, 2, 2, 4, 5);
    d.domains[1].instances[0].label = 7;
    TrainConfig cfg;
    EXPECT_THROW((void)train(net, d, cfg), LabelSpaceError);
}

TEST(ExtractAgnostic, FullFormPicksTrailingSlices) {
    Rng rng(449);
    Network net = mlp_full(rng, 4, 5, 3, 2);
    Network conc = extract_agnostic(net);
    EXPECT_TRUE(conc.concrete());
    for (std::size_t i : {0u, 2u}) {
        const Tensor& full = std::get<Tensor>(net.layers[i].generator->form);
        std::vector<double> sel(3, 0.0);
        sel[2] = 1.0;
        Tensor shared = mode_n_vec_product(full, sel, 2);
        EXPECT_EQ(conc.layers[i].plain->weights, shared);
    }
}

TEST(ExtractAgnostic, ForwardAgreementWithinTinyTolerance) {
    Rng rng(457);
    Network net = mlp_full(rng, 5, 6, 3, 3);
    factorize_layer(net.layers[0], /*full_rank=*/false);
    Network conc = extract_agnostic(net);
    DomainDescriptor z = agnostic_descriptor(3);
    for (int trial = 0; trial < 100; ++trial) {
        Tensor x = random_tensor(rng, {5});
        std::vector<double> a = forward(net, x, &z);
        std::vector<double> b = forward(conc, x);
        EXPECT_LE(max_abs_diff(a, b), 1e-12);
    }
}

TEST(Evaluate, PerfectAndConstantClassifiers) {
    // Identity-ish scores: class c scores highest on instances of class c.
    Network net;
    net.source_count = 0;
    net.class_count = 3;
    net.input_shape = {3};
    Layer l;
    l.kind = LayerKind::kFc;
    ConcreteWeights w;
    w.weights = Tensor({3, 3});
    for (std::size_t i = 0; i < 3; ++i) {
        std::vector<std::size_t> idx{i, i};
        w.weights.at(idx) = 1.0;
    }
    w.bias.assign(3, 0.0);
    l.plain = std::move(w);
    net.layers.push_back(std::move(l));

    std::vector<Instance> data;
    for (std::uint32_t c = 0; c < 3; ++c) {
        Tensor x({3});
        x[c] = 1.0;
        data.push_back(Instance{x, c});
    }
    EXPECT_EQ(evaluate(net, data), 1.0);

    // Zero weights: constant scores, argmax ties at class 0.
    Network zero = net;
    zero.layers[0].plain->weights = Tensor({3, 3});
    EXPECT_NEAR(evaluate(zero, data), 1.0 / 3.0, 1e-12);
}

TEST(Evaluate, HandCountedFixture) {
    // One FC layer scoring x directly; 10 instances, 7 correctly labeled.
    Network net;
    net.source_count = 0;
    net.class_count = 2;
    net.input_shape = {2};
    Layer l;
    l.kind = LayerKind::kFc;
    ConcreteWeights w;
    w.weights = Tensor({2, 2}, {1.0, 0.0, 0.0, 1.0});
    w.bias.assign(2, 0.0);
    l.plain = std::move(w);
    net.layers.push_back(std::move(l));

    std::vector<Instance> data;
    for (int i = 0; i < 10; ++i) {
        bool label_one = i % 2 == 1;
        bool score_one = i < 7 ? label_one : !label_one;  // last 3 misclassified
        Tensor x({2});
        x[score_one ? 1 : 0] = 1.0;
        data.push_back(Instance{x, static_cast<std::uint32_t>(label_one ? 1 : 0)});
    }
    EXPECT_NEAR(evaluate(net, data), 0.7, 1e-12);
}

TEST(Penultimate, FeaturesAreLastHiddenActivation) {
    Rng rng(461);
    Network net = mlp_full(rng, 4, 6, 3, 2);
    Network conc = extract_agnostic(net);
    Tensor x = random_tensor(rng, {4});
    std::vector<double> feats = penultimate_features(conc, x);
    ASSERT_EQ(feats.size(), 6u);
    // Forward by hand through layer 0 + ReLU.
    ConcreteWeights w0 = *conc.layers[0].plain;
    std::vector<double> expect(6, 0.0);
    for (std::size_t j = 0; j < 6; ++j) {
        double s = w0.bias[j];
        for (std::size_t i = 0; i < 4; ++i) {
            std::vector<std::size_t> idx{i, j};
            s += x[i] * w0.weights.at(idx);
        }
        expect[j] = std::max(0.0, s);
    }
    EXPECT_LT(max_abs_diff(feats, expect), 1e-15);
}

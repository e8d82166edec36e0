// SPDX-License-Identifier: Apache-2.0
#include "dgen_cli/experiment.hpp"

#include "dgen/rng.hpp"

namespace dgen::cli {

Mode mode_from_name(const std::string& name) {
    if (name == "deep_all") return Mode::kDeepAll;
    if (name == "tuning_last") return Mode::kTuningLast;
    if (name == "two_hot_last") return Mode::kTwoHotLast;
    if (name == "two_hot_decomp_last") return Mode::kTwoHotDecompLast;
    if (name == "full") return Mode::kFull;
    throw ConfigError("unknown mode: " + name);
}

std::string mode_name(Mode mode) {
    switch (mode) {
        case Mode::kDeepAll: return "deep_all";
        case Mode::kTuningLast: return "tuning_last";
        case Mode::kTwoHotLast: return "two_hot_last";
        case Mode::kTwoHotDecompLast: return "two_hot_decomp_last";
        case Mode::kFull: return "full";
    }
    throw ConfigError("unknown mode value");
}

const std::vector<Mode>& all_modes() {
    static const std::vector<Mode> modes{Mode::kDeepAll, Mode::kTuningLast,
                                         Mode::kTwoHotLast, Mode::kTwoHotDecompLast,
                                         Mode::kFull};
    return modes;
}

namespace {

Layer weightless(LayerKind kind) {
    Layer l;
    l.kind = kind;
    return l;
}

Layer plain_fc(Rng& rng, std::size_t in, std::size_t out, bool trainable) {
    Layer l;
    l.kind = LayerKind::kFc;
    l.plain = make_plain_weights(FcShape{in, out}, rng);
    l.trainable = trainable;
    return l;
}

Layer generated_fc(Rng& rng, std::size_t in, std::size_t out, std::size_t s,
                   bool factored, double epsilon) {
    Layer l;
    l.kind = LayerKind::kFc;
    l.generator = factored
                      ? make_factored_generator(FcShape{in, out}, s, epsilon, rng)
                      : make_full_generator(FcShape{in, out}, s, rng);
    return l;
}

std::size_t flat_size(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return n;
}

}  // namespace

Network build_mode_network(Mode mode, const std::vector<std::size_t>& input_shape,
                          std::size_t class_count, std::size_t source_count,
                          const ExperimentConfig& cfg) {
    if ((mode == Mode::kTwoHotLast || mode == Mode::kTwoHotDecompLast ||
         mode == Mode::kFull) &&
        source_count < 2) {
        throw ConfigError("domain-conditioned modes need at least 2 source domains");
    }
    const std::size_t in = flat_size(input_shape);
    const std::size_t hidden = cfg.hidden;
    Rng rng(derive_seed(cfg.train.seed, 0x1417ULL));

    Network net;
    net.class_count = class_count;
    net.input_shape = input_shape;

    switch (mode) {
        case Mode::kDeepAll:
            net.source_count = 0;
            net.layers.push_back(plain_fc(rng, in, hidden, /*trainable=*/true));
            net.layers.push_back(weightless(LayerKind::kRelu));
            net.layers.push_back(plain_fc(rng, hidden, class_count, true));
            break;
        case Mode::kTuningLast:
            net.source_count = 0;
            net.layers.push_back(plain_fc(rng, in, hidden, /*trainable=*/false));
            net.layers.push_back(weightless(LayerKind::kRelu));
            net.layers.push_back(plain_fc(rng, hidden, class_count, true));
            break;
        case Mode::kTwoHotLast:
            net.source_count = source_count;
            net.layers.push_back(plain_fc(rng, in, hidden, /*trainable=*/false));
            net.layers.push_back(weightless(LayerKind::kRelu));
            net.layers.push_back(generated_fc(rng, hidden, class_count, source_count,
                                              /*factored=*/false, cfg.epsilon));
            break;
        case Mode::kTwoHotDecompLast:
            net.source_count = source_count;
            net.layers.push_back(plain_fc(rng, in, hidden, /*trainable=*/false));
            net.layers.push_back(weightless(LayerKind::kRelu));
            net.layers.push_back(generated_fc(rng, hidden, class_count, source_count,
                                              /*factored=*/true, cfg.epsilon));
            break;
        case Mode::kFull:
            net.source_count = source_count;
            net.layers.push_back(generated_fc(rng, in, hidden, source_count,
                                              /*factored=*/true, cfg.epsilon));
            net.layers.push_back(weightless(LayerKind::kRelu));
            net.layers.push_back(generated_fc(rng, hidden, class_count, source_count,
                                              /*factored=*/true, cfg.epsilon));
            break;
    }
    net.layers.push_back(weightless(LayerKind::kSoftmaxXent));
    validate(net);
    return net;
}

RunResult run_mode(Mode mode, const MultiDomainDataset& sources,
                   const MultiDomainDataset& held_out, const ExperimentConfig& cfg) {
    Network net = build_mode_network(mode, sources.input_shape, sources.class_count,
                                     sources.domain_count(), cfg);
    RunResult result;
    result.report = train(net, sources, cfg.train);
    result.agnostic = extract_agnostic(result.report.best);
    if (!held_out.domains.empty()) {
        result.held_out_accuracy =
            evaluate(result.agnostic, held_out.domains.front().instances);
    }
    return result;
}

double run_single_source(const MultiDomainDataset& sources, std::size_t source_index,
                         const MultiDomainDataset& held_out,
                         const ExperimentConfig& cfg) {
    MultiDomainDataset one;
    one.class_count = sources.class_count;
    one.input_shape = sources.input_shape;
    one.domains.push_back(sources.domains.at(source_index));

    Network net = build_mode_network(Mode::kDeepAll, one.input_shape, one.class_count,
                                     1, cfg);
    TrainReport report = train(net, one, cfg.train);
    return evaluate(report.best, held_out.domains.front().instances);
}

}  // namespace dgen::cli

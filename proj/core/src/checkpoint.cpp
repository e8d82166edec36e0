// SPDX-License-Identifier: Apache-2.0
#include "dgen/checkpoint.hpp"

#include <fstream>
#include <string>

#include "dgen/dgt1.hpp"

namespace dgen {

using nlohmann::json;

namespace {

std::string kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::kFc: return "fc";
        case LayerKind::kConv2d: return "conv2d";
        case LayerKind::kRelu: return "relu";
        case LayerKind::kSoftmaxXent: return "softmax_xent";
    }
    throw FormatError("checkpoint: unknown layer kind");
}

LayerKind kind_from_name(const std::string& s) {
    if (s == "fc") return LayerKind::kFc;
    if (s == "conv2d") return LayerKind::kConv2d;
    if (s == "relu") return LayerKind::kRelu;
    if (s == "softmax_xent") return LayerKind::kSoftmaxXent;
    throw FormatError("checkpoint: unknown layer kind '" + s + "'");
}

json shape_json(const std::variant<FcShape, Conv2dShape>& ls) {
    if (const auto* fc = std::get_if<FcShape>(&ls)) {
        return json{{"inputs", fc->inputs}, {"outputs", fc->outputs}};
    }
    const auto& cv = std::get<Conv2dShape>(ls);
    return json{{"kernel_h", cv.kernel_h},
                {"kernel_w", cv.kernel_w},
                {"in_depth", cv.in_depth},
                {"filters", cv.filters}};
}

std::variant<FcShape, Conv2dShape> shape_from_json(LayerKind kind, const json& j) {
    if (kind == LayerKind::kFc) {
        return FcShape{j.at("inputs").get<std::size_t>(),
                       j.at("outputs").get<std::size_t>()};
    }
    return Conv2dShape{j.at("kernel_h").get<std::size_t>(),
                       j.at("kernel_w").get<std::size_t>(),
                       j.at("in_depth").get<std::size_t>(),
                       j.at("filters").get<std::size_t>()};
}

Tensor matrix_as_tensor(const Matrix& m) { return m.to_tensor(); }

Matrix tensor_as_matrix(const Tensor& t) { return Matrix::from_tensor(t); }

}  // namespace

void save_checkpoint(const std::filesystem::path& dir, const Network& net,
                     double rho) {
    validate(net);
    std::filesystem::create_directories(dir);
    json manifest;
    manifest["format_version"] = 1;
    manifest["kind"] = net.concrete() ? "concrete" : "parameterized";
    manifest["source_count"] = net.source_count;
    manifest["rho"] = rho;
    manifest["class_count"] = net.class_count;
    manifest["input_shape"] = net.input_shape;

    json layers = json::array();
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const Layer& l = net.layers[i];
        json jl;
        jl["kind"] = kind_name(l.kind);
        jl["trainable"] = l.trainable;
        std::string stem = "layer_" + std::to_string(i);
        if (l.generator) {
            const WeightGenerator& g = *l.generator;
            jl["shape"] = shape_json(g.layer_shape);
            std::string bias_file = stem + "_bias_table.dgt1";
            write_dgt1(dir / bias_file, matrix_as_tensor(g.bias_table));
            jl["bias_table"] = bias_file;
            if (g.factored()) {
                const TuckerFactors& f = std::get<TuckerFactors>(g.form);
                jl["form"] = "factored";
                jl["ranks"] = f.ranks();
                std::string core_file = stem + "_core.dgt1";
                write_dgt1(dir / core_file, f.core);
                jl["core"] = core_file;
                json factor_files = json::array();
                for (std::size_t m = 0; m < f.factors.size(); ++m) {
                    std::string ff = stem + "_factor" + std::to_string(m) + ".dgt1";
                    write_dgt1(dir / ff, matrix_as_tensor(f.factors[m]));
                    factor_files.push_back(ff);
                }
                jl["factors"] = std::move(factor_files);
            } else {
                jl["form"] = "full";
                std::string wf = stem + "_weights.dgt1";
                write_dgt1(dir / wf, std::get<Tensor>(g.form));
                jl["weights"] = wf;
            }
        } else if (l.plain) {
            jl["form"] = "plain";
            std::string wf = stem + "_weights.dgt1";
            std::string bf = stem + "_bias.dgt1";
            write_dgt1(dir / wf, l.plain->weights);
            write_dgt1(dir / bf, Tensor({l.plain->bias.size()}, l.plain->bias));
            jl["weights"] = wf;
            jl["bias"] = bf;
        }
        layers.push_back(std::move(jl));
    }
    manifest["layers"] = std::move(layers);

    std::ofstream os(dir / "manifest.json", std::ios::trunc);
    if (!os) throw FormatError("checkpoint: cannot write manifest in " + dir.string());
    os << manifest.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
    std::ifstream is(dir / "manifest.json");
    if (!is) throw FormatError("checkpoint: missing manifest.json in " + dir.string());
    json manifest;
    try {
        is >> manifest;
    } catch (const json::exception& e) {
        throw FormatError("checkpoint: bad manifest.json: " + std::string(e.what()));
    }

    Checkpoint ck;
    try {
        if (manifest.at("format_version") != 1) {
            throw FormatError("checkpoint: unsupported format_version");
        }
        ck.rho = manifest.at("rho").get<double>();
        Network& net = ck.network;
        net.source_count = manifest.at("source_count").get<std::size_t>();
        net.class_count = manifest.at("class_count").get<std::size_t>();
        net.input_shape = manifest.at("input_shape").get<std::vector<std::size_t>>();

        for (const json& jl : manifest.at("layers")) {
            Layer l;
            l.kind = kind_from_name(jl.at("kind").get<std::string>());
            l.trainable = jl.at("trainable").get<bool>();
            if (jl.contains("form")) {
                std::string form = jl.at("form").get<std::string>();
                if (form == "plain") {
                    ConcreteWeights w;
                    w.weights = read_dgt1(dir / jl.at("weights").get<std::string>());
                    Tensor bias = read_dgt1(dir / jl.at("bias").get<std::string>());
                    w.bias.assign(bias.data().begin(), bias.data().end());
                    l.plain = std::move(w);
                } else {
                    WeightGenerator g;
                    g.layer_shape = shape_from_json(l.kind, jl.at("shape"));
                    g.bias_table = tensor_as_matrix(
                        read_dgt1(dir / jl.at("bias_table").get<std::string>()));
                    if (form == "full") {
                        g.form = read_dgt1(dir / jl.at("weights").get<std::string>());
                    } else if (form == "factored") {
                        TuckerFactors f;
                        f.core = read_dgt1(dir / jl.at("core").get<std::string>());
                        for (const json& jf : jl.at("factors")) {
                            f.factors.push_back(
                                tensor_as_matrix(read_dgt1(dir / jf.get<std::string>())));
                        }
                        g.form = std::move(f);
                    } else {
                        throw FormatError("checkpoint: unknown form '" + form + "'");
                    }
                    l.generator = std::move(g);
                }
            }
            net.layers.push_back(std::move(l));
        }
    } catch (const json::exception& e) {
        throw FormatError("checkpoint: bad manifest.json: " + std::string(e.what()));
    }

    try {
        validate(ck.network);
    } catch (const Error& e) {
        throw FormatError("checkpoint: inconsistent payloads: " + std::string(e.what()));
    }
    return ck;
}

json train_report_json(const TrainReport& report, const TrainConfig& cfg) {
    json j;
    j["format_version"] = 1;
    j["config"] = {{"learning_rate", cfg.learning_rate},
                   {"momentum", cfg.momentum},
                   {"batch_size", cfg.batch_size},
                   {"max_iterations", cfg.max_iterations},
                   {"rho", cfg.rho},
                   {"seed", cfg.seed},
                   {"val_fraction", cfg.val_fraction},
                   {"weight_decay", cfg.weight_decay},
                   {"val_every", cfg.val_every}};
    j["loss_curve"] = report.loss_curve;
    json vc = json::array();
    for (const ValPoint& p : report.val_curve) {
        vc.push_back({{"iteration", p.iteration}, {"accuracy", p.accuracy}});
    }
    j["val_accuracy_curve"] = std::move(vc);
    j["best_iteration"] = report.best_iteration;
    j["best_val_accuracy"] = report.best_val_accuracy;
    if (!report.loss_curve.empty()) j["final_loss"] = report.loss_curve.back();
    return j;
}

}  // namespace dgen

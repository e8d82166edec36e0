// SPDX-License-Identifier: Apache-2.0
#include "dgen_cli/commands.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dgen/checkpoint.hpp"
#include "dgen/rng.hpp"
#include "dgen/shift.hpp"
#include "dgen/tucker.hpp"

namespace dgen::cli {

using nlohmann::json;

namespace {

constexpr std::uint64_t kDatasetSeedTag = 0x5e7aULL;

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw FormatError("cannot write " + path.string());
    os << text;
}

void write_json_file(const std::filesystem::path& path, const json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

std::filesystem::path ensure_out_dir(const std::string& out_dir) {
    if (out_dir.empty()) throw ConfigError("--out directory is required");
    std::filesystem::path p(out_dir);
    std::filesystem::create_directories(p);
    return p;
}

std::vector<FeatureSet> feature_sets(const MultiDomainDataset& d,
                                     const Network* feature_net) {
    std::vector<FeatureSet> out;
    out.reserve(d.domain_count());
    for (const Domain& dom : d.domains) {
        FeatureSet f;
        f.reserve(dom.instances.size());
        for (const Instance& inst : dom.instances) {
            if (feature_net) {
                f.push_back(penultimate_features(*feature_net, inst.x));
            } else {
                f.emplace_back(inst.x.data().begin(), inst.x.data().end());
            }
        }
        out.push_back(std::move(f));
    }
    return out;
}

json shift_report_json(const ShiftReport& r, const std::vector<std::string>& sources,
                       const std::string& target) {
    json matrix = json::array();
    for (std::size_t i = 0; i < r.pairwise_kld.rows(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < r.pairwise_kld.cols(); ++j) {
            row.push_back(r.pairwise_kld(i, j));
        }
        matrix.push_back(std::move(row));
    }
    return json{{"target", target},
                {"sources", sources},
                {"d_shift", r.d_shift},
                {"lambdas", r.lambdas},
                {"pairwise_kld", std::move(matrix)}};
}

std::string fixed3(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << v;
    return os.str();
}

}  // namespace

SyntheticSpec parse_synthetic_spec(const std::string& json_or_path,
                                   std::uint64_t fallback_seed) {
    std::string text = json_or_path;
    if (std::filesystem::exists(json_or_path) &&
        std::filesystem::is_regular_file(json_or_path)) {
        std::ifstream is(json_or_path);
        std::ostringstream buf;
        buf << is.rdbuf();
        text = buf.str();
    }
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError("synthetic spec is not valid JSON: " + std::string(e.what()));
    }

    SyntheticSpec spec;
    try {
        if (j.contains("class_count")) spec.class_count = j["class_count"];
        if (j.contains("domain_count")) spec.domain_count = j["domain_count"];
        if (j.contains("input_dim")) spec.input_dim = j["input_dim"];
        if (j.contains("instances_per_class")) {
            spec.instances_per_class = j["instances_per_class"];
        }
        if (j.contains("prototype_scale")) spec.prototype_scale = j["prototype_scale"];
        if (j.contains("noise_std")) spec.noise_std = j["noise_std"];
        if (j.contains("angles_deg")) {
            spec.angles_deg = j["angles_deg"].get<std::vector<double>>();
        }
        if (j.contains("scales")) spec.scales = j["scales"].get<std::vector<double>>();
        if (j.contains("bias_shifts")) {
            spec.bias_shifts = j["bias_shifts"].get<std::vector<double>>();
        }
        if (j.contains("label_noise")) spec.label_noise = j["label_noise"];
        if (j.contains("names")) {
            spec.names = j["names"].get<std::vector<std::string>>();
        }
        spec.seed = j.contains("seed") ? j["seed"].get<std::uint64_t>()
                                       : derive_seed(fallback_seed, kDatasetSeedTag);
    } catch (const json::exception& e) {
        throw ConfigError("synthetic spec field has the wrong type: " +
                          std::string(e.what()));
    }
    validate(spec);
    return spec;
}

MultiDomainDataset resolve_dataset(const DataOptions& data) {
    const bool have_dir = !data.dataset_dir.empty();
    const bool have_spec = !data.synthetic_spec.empty();
    if (have_dir == have_spec) {
        throw ConfigError("give exactly one of --dataset or --synthetic-spec");
    }
    if (have_dir) return load_dataset(data.dataset_dir);
    return generate_synthetic(parse_synthetic_spec(data.synthetic_spec, data.seed));
}

int cmd_train(const TrainOptions& opt) {
    Mode mode = mode_from_name(opt.mode);
    if (mode == Mode::kDeepAll && opt.rho_explicit) {
        std::cerr << "warning: --rho has no effect in deep_all mode\n";
    }
    MultiDomainDataset data = resolve_dataset(opt.data);
    if (opt.held_out.empty()) throw ConfigError("--held-out is required");

    // The training set is assembled before any mode-specific dispatch; the
    // held-out domain never reaches a training code path.
    HeldOutSplit split = split_held_out(data, opt.held_out);

    ExperimentConfig cfg;
    cfg.hidden = opt.hidden;
    cfg.epsilon = opt.epsilon;
    cfg.train = opt.train;
    RunResult result = run_mode(mode, split.sources, split.held_out, cfg);

    std::filesystem::path out = ensure_out_dir(opt.out_dir);
    save_checkpoint(out / "checkpoint", result.report.best, cfg.train.rho);

    json report = train_report_json(result.report, cfg.train);
    report["mode"] = opt.mode;
    report["held_out"] = opt.held_out;
    report["held_out_accuracy"] = result.held_out_accuracy;
    report["epsilon"] = opt.epsilon;
    report["hidden"] = opt.hidden;
    json sources = json::array();
    for (const Domain& d : split.sources.domains) sources.push_back(d.name);
    report["source_domains"] = std::move(sources);
    write_json_file(out / "report.json", report);

    std::cout << "mode=" << opt.mode << " held_out=" << opt.held_out
              << " best_val=" << fixed3(result.report.best_val_accuracy)
              << " held_out_acc=" << fixed3(result.held_out_accuracy) << "\n";
    return 0;
}

int cmd_eval(const EvalOptions& opt) {
    if (opt.checkpoint_dir.empty()) throw ConfigError("--checkpoint is required");
    if (opt.domain.empty()) throw ConfigError("--domain is required");
    Checkpoint ck = load_checkpoint(opt.checkpoint_dir);
    MultiDomainDataset data = resolve_dataset(opt.data);
    if (!data.has_domain(opt.domain)) {
        throw ConfigError("unknown domain: " + opt.domain);
    }

    Network net = ck.network.concrete() ? ck.network : extract_agnostic(ck.network);
    double acc = evaluate(net, data.domain(opt.domain).instances);

    json report{{"format_version", 1},
                {"domain", opt.domain},
                {"instance_count", data.domain(opt.domain).instances.size()},
                {"accuracy", acc},
                {"checkpoint_kind", ck.network.concrete() ? "concrete" : "parameterized"}};
    std::filesystem::path out = ensure_out_dir(opt.out_dir);
    write_json_file(out / "eval.json", report);
    std::cout << "domain=" << opt.domain << " accuracy=" << fixed3(acc) << "\n";
    return 0;
}

int cmd_shift(const ShiftOptions& opt) {
    MultiDomainDataset data = resolve_dataset(opt.data);
    if (data.domain_count() < 2) {
        throw ConfigError("shift analysis needs at least 2 domains");
    }

    Network feature_net;
    const Network* fnet = nullptr;
    if (opt.feature_source == "penultimate") {
        if (opt.checkpoint_dir.empty()) {
            throw ConfigError("penultimate features need --checkpoint");
        }
        Checkpoint ck = load_checkpoint(opt.checkpoint_dir);
        feature_net = ck.network.concrete() ? ck.network : extract_agnostic(ck.network);
        fnet = &feature_net;
    } else if (opt.feature_source != "raw") {
        throw ConfigError("feature source must be raw or penultimate");
    }

    std::vector<FeatureSet> features = feature_sets(data, fnet);

    json per_target = json::array();
    std::ostringstream table;
    table << std::left << std::setw(14) << "held-out" << std::right << std::setw(10)
          << "d_shift" << "\n";
    double total = 0.0;
    for (std::size_t t = 0; t < data.domain_count(); ++t) {
        std::vector<FeatureSet> sources;
        std::vector<std::string> source_names;
        for (std::size_t s = 0; s < data.domain_count(); ++s) {
            if (s == t) continue;
            sources.push_back(features[s]);
            source_names.push_back(data.domains[s].name);
        }
        ShiftReport r = domain_shift(sources, {features[t]});
        per_target.push_back(shift_report_json(r, source_names, data.domains[t].name));
        table << std::left << std::setw(14) << data.domains[t].name << std::right
              << std::setw(10) << fixed3(r.d_shift) << "\n";
        total += r.d_shift;
    }
    double average = total / static_cast<double>(data.domain_count());
    table << std::left << std::setw(14) << "average" << std::right << std::setw(10)
          << fixed3(average) << "\n";

    json report{{"format_version", 1},
                {"feature_source", opt.feature_source},
                {"per_target", std::move(per_target)},
                {"average_d_shift", average}};
    std::filesystem::path out = ensure_out_dir(opt.out_dir);
    write_json_file(out / "shift.json", report);
    write_text_file(out / "shift.txt", table.str());
    std::cout << table.str();
    return 0;
}

int cmd_decompose(const DecomposeOptions& opt) {
    if (opt.checkpoint_dir.empty()) throw ConfigError("--checkpoint is required");
    Checkpoint ck = load_checkpoint(opt.checkpoint_dir);
    if (ck.network.concrete()) {
        throw FormatError("checkpoint has no domain-parameterized layers to decompose");
    }

    json layers = json::array();
    std::ostringstream table;
    table << std::left << std::setw(8) << "layer" << std::setw(10) << "kind"
          << std::setw(22) << "ranks" << std::right << std::setw(12) << "error"
          << std::setw(12) << "full" << std::setw(12) << "tucker" << "\n";

    for (std::size_t i = 0; i < ck.network.layers.size(); ++i) {
        const Layer& l = ck.network.layers[i];
        if (!l.generator) continue;
        const WeightGenerator& gen = *l.generator;
        Tensor full = gen.factored() ? reconstruct(std::get<TuckerFactors>(gen.form))
                                     : std::get<Tensor>(gen.form);
        RankSelection sel = select_ranks(full, opt.epsilon);

        std::vector<std::size_t> dims = gen.weight_shape();
        std::size_t s = gen.source_count();
        std::size_t full_params = param_count_full(dims, s);
        std::size_t tucker_params = param_count_tucker(dims, sel.ranks, s);

        std::ostringstream ranks_str;
        for (std::size_t k = 0; k < sel.ranks.size(); ++k) {
            ranks_str << (k ? "x" : "") << sel.ranks[k];
        }
        layers.push_back({{"layer", i},
                          {"kind", l.kind == LayerKind::kFc ? "fc" : "conv2d"},
                          {"dims", dims},
                          {"ranks", sel.ranks},
                          {"domain_mode_rank", sel.ranks.back()},
                          {"achieved_error", sel.achieved_error},
                          {"param_count_full", full_params},
                          {"param_count_tucker", tucker_params}});
        table << std::left << std::setw(8) << i << std::setw(10)
              << (l.kind == LayerKind::kFc ? "fc" : "conv2d") << std::setw(22)
              << ranks_str.str() << std::right << std::setw(12)
              << fixed3(sel.achieved_error) << std::setw(12) << full_params
              << std::setw(12) << tucker_params << "\n";
    }

    json report{{"format_version", 1},
                {"epsilon", opt.epsilon},
                {"source_count", ck.network.source_count},
                {"layers", std::move(layers)}};
    std::filesystem::path out = ensure_out_dir(opt.out_dir);
    write_json_file(out / "decompose.json", report);
    write_text_file(out / "decompose.txt", table.str());
    std::cout << table.str();
    return 0;
}

int cmd_ablate(const AblateOptions& opt) {
    MultiDomainDataset data = resolve_dataset(opt.data);
    if (data.domain_count() < 3) {
        throw ConfigError("ablation needs at least 3 domains so every held-out "
                          "choice leaves 2 sources");
    }

    json cells = json::array();
    std::map<std::string, double> mode_totals;
    std::ostringstream table;
    table << std::left << std::setw(14) << "held-out";
    for (Mode m : all_modes()) table << std::right << std::setw(21) << mode_name(m);
    table << "\n";

    std::size_t cell_index = 0;
    for (std::size_t t = 0; t < data.domain_count(); ++t) {
        const std::string& held_out_name = data.domains[t].name;
        HeldOutSplit split = split_held_out(data, held_out_name);
        table << std::left << std::setw(14) << held_out_name;
        for (Mode mode : all_modes()) {
            ExperimentConfig cfg;
            cfg.hidden = opt.hidden;
            cfg.epsilon = opt.epsilon;
            cfg.train = opt.train;
            cfg.train.seed = derive_seed(opt.train.seed, cell_index);
            ++cell_index;

            RunResult r = run_mode(mode, split.sources, split.held_out, cfg);
            cells.push_back({{"mode", mode_name(mode)},
                             {"held_out", held_out_name},
                             {"accuracy", r.held_out_accuracy},
                             {"best_val_accuracy", r.report.best_val_accuracy}});
            mode_totals[mode_name(mode)] += r.held_out_accuracy;
            table << std::right << std::setw(21) << fixed3(r.held_out_accuracy);
        }
        table << "\n";
    }

    json means;
    table << std::left << std::setw(14) << "mean";
    for (Mode m : all_modes()) {
        double mean = mode_totals[mode_name(m)] / static_cast<double>(data.domain_count());
        means[mode_name(m)] = mean;
        table << std::right << std::setw(21) << fixed3(mean);
    }
    table << "\n";

    json report{{"format_version", 1},
                {"seed", opt.train.seed},
                {"cells", std::move(cells)},
                {"mode_means", std::move(means)}};
    std::filesystem::path out = ensure_out_dir(opt.out_dir);
    write_json_file(out / "ablate.json", report);
    write_text_file(out / "ablate.txt", table.str());
    std::cout << table.str();
    return 0;
}

int cmd_synth(const SynthOptions& opt) {
    if (opt.synthetic_spec.empty()) throw ConfigError("--synthetic-spec is required");
    SyntheticSpec spec = parse_synthetic_spec(opt.synthetic_spec, opt.seed);
    MultiDomainDataset data = generate_synthetic(spec);
    std::filesystem::path out = ensure_out_dir(opt.out_dir);
    save_dataset(out, data);
    std::cout << "wrote " << data.domain_count() << " domains, "
              << data.domains.front().instances.size() << " instances each, to "
              << out.string() << "\n";
    return 0;
}

int run_with_exit_codes(const std::function<int()>& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const InvalidDomain& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const InvalidMode& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const InvalidRank& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const EmptyBatch& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const EmptyDomain& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return 3;
    } catch (const LabelSpaceError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const ShapeError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace dgen::cli

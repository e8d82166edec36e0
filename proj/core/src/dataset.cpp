// SPDX-License-Identifier: Apache-2.0
#include "dgen/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <nlohmann/json.hpp>

#include "dgen/dgt1.hpp"
#include "dgen/rng.hpp"

namespace dgen {

using nlohmann::json;

const Domain& MultiDomainDataset::domain(const std::string& name) const {
    for (const Domain& d : domains) {
        if (d.name == name) return d;
    }
    throw ConfigError("unknown domain: " + name);
}

bool MultiDomainDataset::has_domain(const std::string& name) const {
    for (const Domain& d : domains) {
        if (d.name == name) return true;
    }
    return false;
}

void validate(const MultiDomainDataset& d) {
    if (d.class_count == 0) throw LabelSpaceError("dataset: class_count must be >= 1");
    if (d.input_shape.empty()) throw ShapeError("dataset: input shape is empty");
    for (const Domain& dom : d.domains) {
        for (const Instance& inst : dom.instances) {
            if (inst.label >= d.class_count) {
                throw LabelSpaceError("dataset: label " + std::to_string(inst.label) +
                                      " outside [0, " + std::to_string(d.class_count) +
                                      ") in domain " + dom.name);
            }
            if (inst.x.shape() != d.input_shape) {
                throw ShapeError("dataset: instance shape mismatch in domain " +
                                 dom.name);
            }
        }
    }
}

void save_dataset(const std::filesystem::path& dir, const MultiDomainDataset& d) {
    validate(d);
    std::filesystem::create_directories(dir);
    json manifest;
    manifest["format_version"] = 1;
    manifest["class_count"] = d.class_count;
    manifest["input_shape"] = d.input_shape;
    json domains = json::array();
    for (std::size_t i = 0; i < d.domains.size(); ++i) {
        const Domain& dom = d.domains[i];
        std::string stem = "domain_" + std::to_string(i);
        std::string x_file = stem + "_x.dgt1";
        std::string y_file = stem + "_y.dgt1";

        // Stack instances along a new leading mode.
        std::vector<std::size_t> stacked_shape;
        stacked_shape.push_back(dom.instances.size());
        stacked_shape.insert(stacked_shape.end(), d.input_shape.begin(),
                             d.input_shape.end());
        Tensor stacked(stacked_shape);
        std::size_t per = 1;
        for (std::size_t e : d.input_shape) per *= e;
        std::vector<std::uint32_t> labels(dom.instances.size());
        for (std::size_t j = 0; j < dom.instances.size(); ++j) {
            const Instance& inst = dom.instances[j];
            std::copy(inst.x.data().begin(), inst.x.data().end(),
                      stacked.data().begin() + static_cast<std::ptrdiff_t>(j * per));
            labels[j] = inst.label;
        }
        write_dgt1(dir / x_file, stacked);
        write_dgt1_labels(dir / y_file, labels);

        domains.push_back({{"name", dom.name},
                           {"instances", x_file},
                           {"labels", y_file},
                           {"count", dom.instances.size()}});
    }
    manifest["domains"] = std::move(domains);
    std::ofstream os(dir / "manifest.json", std::ios::trunc);
    if (!os) throw FormatError("dataset: cannot write manifest in " + dir.string());
    os << manifest.dump(2) << '\n';
}

MultiDomainDataset load_dataset(const std::filesystem::path& dir) {
    std::ifstream is(dir / "manifest.json");
    if (!is) throw FormatError("dataset: missing manifest.json in " + dir.string());
    json manifest;
    try {
        is >> manifest;
    } catch (const json::exception& e) {
        throw FormatError("dataset: bad manifest.json: " + std::string(e.what()));
    }
    if (!manifest.contains("format_version") || manifest["format_version"] != 1) {
        throw FormatError("dataset: unsupported manifest format_version");
    }

    MultiDomainDataset d;
    try {
        d.class_count = manifest.at("class_count").get<std::size_t>();
        d.input_shape = manifest.at("input_shape").get<std::vector<std::size_t>>();
        for (const json& jd : manifest.at("domains")) {
            Domain dom;
            dom.name = jd.at("name").get<std::string>();
            Tensor stacked = read_dgt1(dir / jd.at("instances").get<std::string>());
            std::vector<std::uint32_t> labels =
                read_dgt1_labels(dir / jd.at("labels").get<std::string>());
            std::size_t count = jd.at("count").get<std::size_t>();
            if (stacked.order() != d.input_shape.size() + 1 ||
                stacked.extent(0) != count || labels.size() != count) {
                throw ShapeError("dataset: instance/label counts disagree for " +
                                 dom.name);
            }
            std::vector<std::size_t> per_shape(stacked.shape().begin() + 1,
                                               stacked.shape().end());
            if (per_shape != d.input_shape) {
                throw ShapeError("dataset: instance shape mismatch for " + dom.name);
            }
            std::size_t per = 1;
            for (std::size_t e : per_shape) per *= e;
            dom.instances.reserve(count);
            for (std::size_t j = 0; j < count; ++j) {
                Instance inst;
                inst.x = Tensor(per_shape,
                                std::vector<double>(
                                    stacked.data().begin() + static_cast<std::ptrdiff_t>(j * per),
                                    stacked.data().begin() + static_cast<std::ptrdiff_t>((j + 1) * per)));
                inst.label = labels[j];
                dom.instances.push_back(std::move(inst));
            }
            d.domains.push_back(std::move(dom));
        }
    } catch (const json::exception& e) {
        throw FormatError("dataset: bad manifest.json: " + std::string(e.what()));
    }
    validate(d);
    return d;
}

void validate(const SyntheticSpec& spec) {
    if (spec.class_count == 0 || spec.domain_count == 0 || spec.input_dim == 0 ||
        spec.instances_per_class == 0) {
        throw ConfigError("synthetic spec: counts must be positive");
    }
    if (spec.input_dim < 2) {
        throw ConfigError("synthetic spec: rotations need input_dim >= 2");
    }
    if (!(spec.label_noise >= 0.0) || spec.label_noise >= 0.5) {
        throw ConfigError("synthetic spec: label noise must lie in [0, 0.5)");
    }
    if (!(spec.noise_std >= 0.0) || !(spec.prototype_scale > 0.0)) {
        throw ConfigError("synthetic spec: scales must be positive");
    }
    auto check_len = [&](const auto& v, const char* what) {
        if (!v.empty() && v.size() != spec.domain_count) {
            throw ConfigError(std::string("synthetic spec: ") + what +
                              " must have one entry per domain");
        }
    };
    check_len(spec.angles_deg, "angles_deg");
    check_len(spec.scales, "scales");
    check_len(spec.bias_shifts, "bias_shifts");
    check_len(spec.names, "names");
}

namespace {

// Rotation by `angle` in the plane spanned by orthonormal u, v:
// x -> x + (cos a - 1)(<u,x>u + <v,x>v) + sin a (<u,x>v - <v,x>u).
struct PlaneRotation {
    std::vector<double> u;
    std::vector<double> v;
    double cos_a = 1.0;
    double sin_a = 0.0;

    void apply(std::vector<double>& x) const {
        double cu = 0.0;
        double cv = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            cu += u[i] * x[i];
            cv += v[i] * x[i];
        }
        double au = (cos_a - 1.0) * cu - sin_a * cv;
        double av = (cos_a - 1.0) * cv + sin_a * cu;
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] += au * u[i] + av * v[i];
        }
    }
};

std::vector<double> random_unit(Rng& rng, std::size_t dim) {
    std::vector<double> v(dim);
    double n2 = 0.0;
    for (double& x : v) {
        x = rng.normal();
        n2 += x * x;
    }
    double n = std::sqrt(n2);
    for (double& x : v) x /= n;
    return v;
}

}  // namespace

MultiDomainDataset generate_synthetic(const SyntheticSpec& spec) {
    validate(spec);
    Rng rng(derive_seed(spec.seed, 0xd47a5e7ULL));

    const std::size_t dim = spec.input_dim;

    // Shared class prototypes, drawn once.
    std::vector<std::vector<double>> prototypes(spec.class_count,
                                                std::vector<double>(dim));
    for (auto& p : prototypes) {
        for (double& x : p) x = spec.prototype_scale * rng.normal();
    }

    // One shared random 2-plane; each domain rotates it by its own angle.
    // Domains therefore agree on the plane's orthogonal complement and
    // disagree inside the plane, so the invariant structure is recoverable
    // from multiple sources. Draw order is independent of the transform
    // values so datasets differing only in angles share all random draws.
    std::vector<double> plane_u = random_unit(rng, dim);
    std::vector<double> plane_v = random_unit(rng, dim);
    {
        double proj = 0.0;
        for (std::size_t i = 0; i < dim; ++i) proj += plane_u[i] * plane_v[i];
        double n2 = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            plane_v[i] -= proj * plane_u[i];
            n2 += plane_v[i] * plane_v[i];
        }
        double n = std::sqrt(n2);
        for (double& x : plane_v) x /= n;
    }
    std::vector<PlaneRotation> rotations(spec.domain_count);
    std::vector<std::vector<double>> bias_dirs(spec.domain_count);
    for (std::size_t d = 0; d < spec.domain_count; ++d) {
        double angle_deg = spec.angles_deg.empty() ? 0.0 : spec.angles_deg[d];
        double angle = angle_deg * std::numbers::pi / 180.0;
        rotations[d] = PlaneRotation{plane_u, plane_v, std::cos(angle),
                                     std::sin(angle)};
        bias_dirs[d] = random_unit(rng, dim);
    }

    MultiDomainDataset out;
    out.class_count = spec.class_count;
    out.input_shape = {dim};
    out.domains.resize(spec.domain_count);
    for (std::size_t d = 0; d < spec.domain_count; ++d) {
        Domain& dom = out.domains[d];
        dom.name = spec.names.empty() ? "d" + std::to_string(d) : spec.names[d];
        double scale = spec.scales.empty() ? 1.0 : spec.scales[d];
        double shift = spec.bias_shifts.empty() ? 0.0 : spec.bias_shifts[d];
        dom.instances.reserve(spec.class_count * spec.instances_per_class);
        for (std::uint32_t c = 0; c < spec.class_count; ++c) {
            for (std::size_t j = 0; j < spec.instances_per_class; ++j) {
                std::vector<double> x = prototypes[c];
                for (double& xi : x) xi += spec.noise_std * rng.normal();
                rotations[d].apply(x);
                for (std::size_t i = 0; i < dim; ++i) {
                    x[i] = scale * x[i] + shift * bias_dirs[d][i];
                }
                std::uint32_t label = c;
                if (spec.label_noise > 0.0 && rng.uniform() < spec.label_noise &&
                    spec.class_count > 1) {
                    // Uniform over the other labels.
                    std::uint32_t r = static_cast<std::uint32_t>(
                        rng.index(spec.class_count - 1));
                    label = r >= c ? r + 1 : r;
                }
                dom.instances.push_back(Instance{Tensor({dim}, std::move(x)), label});
            }
        }
    }
    return out;
}

SplitDataset split_train_val(const MultiDomainDataset& d, double fraction,
                             std::uint64_t seed) {
    if (!(fraction > 0.0) || !(fraction < 1.0)) {
        throw ConfigError("split_train_val: fraction must lie in (0, 1)");
    }
    SplitDataset out;
    out.train.class_count = out.val.class_count = d.class_count;
    out.train.input_shape = out.val.input_shape = d.input_shape;
    Rng rng(derive_seed(seed, 0x5b117ULL));
    for (const Domain& dom : d.domains) {
        std::vector<std::size_t> idx(dom.instances.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        rng.shuffle(idx);
        // Validation never empty: ceil of the fraction.
        std::size_t val_count = static_cast<std::size_t>(
            std::ceil(fraction * static_cast<double>(dom.instances.size())));
        val_count = std::min(val_count, dom.instances.size());
        std::vector<std::size_t> val_idx(idx.begin(),
                                         idx.begin() + static_cast<std::ptrdiff_t>(val_count));
        std::vector<std::size_t> train_idx(idx.begin() + static_cast<std::ptrdiff_t>(val_count),
                                           idx.end());
        std::sort(val_idx.begin(), val_idx.end());
        std::sort(train_idx.begin(), train_idx.end());

        Domain train_dom{dom.name, {}};
        Domain val_dom{dom.name, {}};
        train_dom.instances.reserve(train_idx.size());
        val_dom.instances.reserve(val_idx.size());
        for (std::size_t i : train_idx) train_dom.instances.push_back(dom.instances[i]);
        for (std::size_t i : val_idx) val_dom.instances.push_back(dom.instances[i]);
        out.train.domains.push_back(std::move(train_dom));
        out.val.domains.push_back(std::move(val_dom));
    }
    return out;
}

HeldOutSplit split_held_out(const MultiDomainDataset& d,
                            const std::string& held_out_name) {
    if (!d.has_domain(held_out_name)) {
        throw ConfigError("held-out domain not in dataset: " + held_out_name);
    }
    HeldOutSplit out;
    out.sources.class_count = out.held_out.class_count = d.class_count;
    out.sources.input_shape = out.held_out.input_shape = d.input_shape;
    for (const Domain& dom : d.domains) {
        if (dom.name == held_out_name) {
            out.held_out.domains.push_back(dom);
        } else {
            out.sources.domains.push_back(dom);
        }
    }
    return out;
}

}  // namespace dgen

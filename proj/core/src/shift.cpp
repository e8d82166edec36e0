// SPDX-License-Identifier: Apache-2.0
#include "dgen/shift.hpp"

#include <algorithm>
#include <cmath>

#include "dgen/errors.hpp"

namespace dgen {

DomainDistribution domain_distribution(const FeatureSet& features) {
    if (features.empty()) {
        throw EmptyDomain("domain_distribution: no feature vectors");
    }
    const std::size_t dim = features.front().size();
    if (dim == 0) throw ShapeError("domain_distribution: zero-length features");
    std::vector<double> mean(dim, 0.0);
    for (const auto& f : features) {
        if (f.size() != dim) {
            throw ShapeError("domain_distribution: feature lengths differ");
        }
        for (std::size_t k = 0; k < dim; ++k) mean[k] += f[k];
    }
    for (double& v : mean) v /= static_cast<double>(features.size());

    double mx = *std::max_element(mean.begin(), mean.end());
    double sum = 0.0;
    for (double& v : mean) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double& v : mean) v /= sum;
    return DomainDistribution{std::move(mean)};
}

double kld(const DomainDistribution& p, const DomainDistribution& q) {
    if (p.probs.size() != q.probs.size()) {
        throw ShapeError("kld: dimension mismatch");
    }
    double d = 0.0;
    for (std::size_t k = 0; k < p.probs.size(); ++k) {
        d += p.probs[k] * std::log(p.probs[k] / q.probs[k]);
    }
    return d;
}

ShiftReport domain_shift(const std::vector<FeatureSet>& sources,
                         const std::vector<FeatureSet>& targets) {
    if (sources.empty() || targets.empty()) {
        throw EmptyDomain("domain_shift: need at least one source and one target");
    }
    const std::size_t n = sources.size();
    const std::size_t m = targets.size();

    std::vector<DomainDistribution> ps;
    std::vector<DomainDistribution> qs;
    ps.reserve(n);
    qs.reserve(m);
    double total = 0.0;
    for (const FeatureSet& s : sources) {
        ps.push_back(domain_distribution(s));
        total += static_cast<double>(s.size());
    }
    for (const FeatureSet& t : targets) qs.push_back(domain_distribution(t));

    ShiftReport r;
    r.lambdas.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        r.lambdas[i] = static_cast<double>(n) *
                       static_cast<double>(sources[i].size()) / total;
    }
    r.pairwise_kld = Matrix(n, m);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            double d = kld(ps[i], qs[j]);
            r.pairwise_kld(i, j) = d;
            acc += r.lambdas[i] * d;
        }
    }
    r.d_shift = acc / static_cast<double>(n * m);
    return r;
}

MarginReport accuracy_margin(const std::vector<double>& within,
                             const std::vector<double>& cross) {
    if (within.size() != cross.size()) {
        throw ShapeError("accuracy_margin: list lengths differ");
    }
    MarginReport r;
    r.margins.resize(within.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < within.size(); ++i) {
        r.margins[i] = within[i] - cross[i];
        sum += r.margins[i];
    }
    r.mean = within.empty() ? 0.0 : sum / static_cast<double>(within.size());
    return r;
}

}  // namespace dgen

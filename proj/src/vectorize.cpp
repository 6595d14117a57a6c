#include "topofeat/vectorize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "topofeat/errors.hpp"

namespace topofeat {

namespace {

void check_range(const VectorizerConfig& cfg) {
    if (!(cfg.range.hi > cfg.range.lo))
        throw std::invalid_argument("vectorizer range must satisfy lo < hi");
}

void check_finite(const std::vector<PersistencePair>& pairs) {
    for (const auto& p : pairs)
        if (p.is_infinite()) throw NotFinitized();
}

FeatureVector zeros(VectorizeMethod method, std::size_t n) {
    FeatureVector out;
    out.values.assign(n, 0.0);
    out.layout.push_back({"", -1, method, n});
    return out;
}

double sample_point(const Range& r, int count, int j) {
    if (count <= 1) return r.lo;
    return r.lo + (r.hi - r.lo) * static_cast<double>(j) / static_cast<double>(count - 1);
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double pop_std_of(const std::vector<double>& v, double mean) {
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size()));
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

} // namespace

std::string to_string(VectorizeMethod m) {
    switch (m) {
    case VectorizeMethod::Landscape: return "landscape";
    case VectorizeMethod::Image: return "image";
    case VectorizeMethod::Binning: return "binning";
    case VectorizeMethod::Statistics: return "statistics";
    }
    throw std::invalid_argument("unknown vectorize method");
}

std::size_t vector_length(const VectorizerConfig& cfg) {
    switch (cfg.method) {
    case VectorizeMethod::Landscape:
        if (cfg.k < 1 || cfg.samples < 2) throw std::invalid_argument("landscape needs k >= 1 and samples >= 2");
        return static_cast<std::size_t>(cfg.k) * static_cast<std::size_t>(cfg.samples);
    case VectorizeMethod::Image:
        if (cfg.resolution < 1) throw std::invalid_argument("persistence image needs resolution >= 1");
        return static_cast<std::size_t>(cfg.resolution) * static_cast<std::size_t>(cfg.resolution);
    case VectorizeMethod::Binning:
        if (cfg.omega < 1) throw std::invalid_argument("binning needs omega >= 1");
        return static_cast<std::size_t>(cfg.omega);
    case VectorizeMethod::Statistics:
        return 10;
    }
    throw std::invalid_argument("unknown vectorize method");
}

FeatureVector landscape(const std::vector<PersistencePair>& pairs, const VectorizerConfig& cfg) {
    check_range(cfg);
    const std::size_t n = vector_length({VectorizeMethod::Landscape, cfg.k, cfg.samples});
    check_finite(pairs);
    if (pairs.empty()) return zeros(VectorizeMethod::Landscape, n);

    FeatureVector out = zeros(VectorizeMethod::Landscape, n);
    std::vector<double> tents(pairs.size());
    for (int j = 0; j < cfg.samples; ++j) {
        const double t = sample_point(cfg.range, cfg.samples, j);
        for (std::size_t i = 0; i < pairs.size(); ++i)
            tents[i] = std::min(t - pairs[i].birth, pairs[i].death - t);
        std::sort(tents.begin(), tents.end(), std::greater<double>());
        const int levels = std::min<int>(cfg.k, static_cast<int>(tents.size()));
        for (int l = 0; l < levels; ++l) {
            const double v = std::max(0.0, tents[static_cast<std::size_t>(l)]);
            out.values[static_cast<std::size_t>(l) * static_cast<std::size_t>(cfg.samples) +
                       static_cast<std::size_t>(j)] = v;
        }
    }
    return out;
}

FeatureVector persistence_image(const std::vector<PersistencePair>& pairs, const VectorizerConfig& cfg) {
    check_range(cfg);
    if (!(cfg.sigma > 0.0)) throw std::invalid_argument("persistence image needs sigma > 0");
    const std::size_t n = vector_length({VectorizeMethod::Image, 0, 0, cfg.resolution});
    check_finite(pairs);
    if (pairs.empty()) return zeros(VectorizeMethod::Image, n);

    const double lo = cfg.range.lo;
    const double span = cfg.range.hi - cfg.range.lo;
    // The weight is linear in persistence, normalized by the largest
    // persistence the range can represent, so the surface is comparable
    // across diagrams sharing one calibrated range.
    const double wscale = 1.0 / span;
    const double step = span / static_cast<double>(cfg.resolution);
    const double inv2s2 = 1.0 / (2.0 * cfg.sigma * cfg.sigma);

    FeatureVector out = zeros(VectorizeMethod::Image, n);
    const int res = cfg.resolution;
    for (int r = 0; r < res; ++r) {
        const double y = (static_cast<double>(r) + 0.5) * step; // persistence axis
        for (int c = 0; c < res; ++c) {
            const double x = lo + (static_cast<double>(c) + 0.5) * step; // birth axis
            double acc = 0.0;
            for (const auto& p : pairs) {
                const double pb = p.birth;
                const double pp = p.death - p.birth;
                const double dx = x - pb;
                const double dy = y - pp;
                acc += (pp * wscale) * std::exp(-(dx * dx + dy * dy) * inv2s2);
            }
            out.values[static_cast<std::size_t>(r) * static_cast<std::size_t>(res) +
                       static_cast<std::size_t>(c)] = acc;
        }
    }
    return out;
}

FeatureVector betti_binning(const std::vector<PersistencePair>& pairs, const VectorizerConfig& cfg) {
    check_range(cfg);
    const std::size_t n = vector_length({VectorizeMethod::Binning, 0, 0, 0, 0.0, cfg.omega});
    check_finite(pairs);

    FeatureVector out = zeros(VectorizeMethod::Binning, n);
    for (int j = 0; j < cfg.omega; ++j) {
        const double v = sample_point(cfg.range, cfg.omega, j);
        double count = 0.0;
        for (const auto& p : pairs)
            if (p.birth <= v && v < p.death) count += 1.0;
        out.values[static_cast<std::size_t>(j)] = count;
    }
    return out;
}

FeatureVector barcode_statistics(const std::vector<PersistencePair>& pairs) {
    check_finite(pairs);
    if (pairs.empty()) return zeros(VectorizeMethod::Statistics, 10);

    std::vector<double> births, deaths, lives;
    births.reserve(pairs.size());
    deaths.reserve(pairs.size());
    lives.reserve(pairs.size());
    for (const auto& p : pairs) {
        births.push_back(p.birth);
        deaths.push_back(p.death);
        lives.push_back(p.death - p.birth);
    }
    const double mb = mean_of(births), md = mean_of(deaths), ml = mean_of(lives);

    FeatureVector out = zeros(VectorizeMethod::Statistics, 10);
    out.values[0] = mb;
    out.values[1] = pop_std_of(births, mb);
    out.values[2] = md;
    out.values[3] = pop_std_of(deaths, md);
    out.values[4] = ml;
    out.values[5] = pop_std_of(lives, ml);
    out.values[6] = median_of(births);
    out.values[7] = median_of(deaths);
    out.values[8] = median_of(lives);
    out.values[9] = static_cast<double>(pairs.size());
    return out;
}

FeatureVector vectorize(const std::vector<PersistencePair>& pairs, const VectorizerConfig& cfg) {
    switch (cfg.method) {
    case VectorizeMethod::Landscape: return landscape(pairs, cfg);
    case VectorizeMethod::Image: return persistence_image(pairs, cfg);
    case VectorizeMethod::Binning: return betti_binning(pairs, cfg);
    case VectorizeMethod::Statistics: return barcode_statistics(pairs);
    }
    throw std::invalid_argument("unknown vectorize method");
}

} // namespace topofeat

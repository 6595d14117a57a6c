#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "topofeat/persistence.hpp"

namespace topofeat {

enum class VectorizeMethod { Landscape, Image, Binning, Statistics };

std::string to_string(VectorizeMethod m);

struct Range {
    double lo = 0.0;
    double hi = 1.0;
};

struct VectorizerConfig {
    VectorizeMethod method = VectorizeMethod::Statistics;
    int k = 100;         // landscape levels
    int samples = 100;   // sample grid size per landscape level
    int resolution = 30; // persistence image side length
    double sigma = 1.0;  // gaussian spread, in filtration units
    int omega = 30;      // binning line count
    Range range;         // closed interval of filtration values
};

/// Output length as a function of the config alone, never of the diagram.
std::size_t vector_length(const VectorizerConfig& cfg);

struct LayoutSegment {
    std::string source; // "G3R1", "cubical"; empty until labeled by the pipeline
    int dim = -1;
    VectorizeMethod method = VectorizeMethod::Statistics;
    std::size_t length = 0;
};

struct FeatureVector {
    std::vector<double> values;
    std::vector<LayoutSegment> layout;
};

/// Persistence landscape values, level-major: for each level 1..k, the level
/// function sampled at cfg.samples equidistant points of cfg.range. The level-l
/// value at t is the l-th largest of min(t - birth, death - t) over pairs,
/// clamped at 0. Throws NotFinitized on infinite pairs.
FeatureVector landscape(const std::vector<PersistencePair>& pairs, const VectorizerConfig& cfg);

/// Persistence image: pairs mapped to (birth, persistence) coordinates, summed
/// as persistence-weighted unit-height Gaussians, sampled at the centers of a
/// resolution x resolution grid over [lo, hi] x [0, hi - lo]. Weight is
/// persistence / (hi - lo). Row-major with rows along the persistence axis.
FeatureVector persistence_image(const std::vector<PersistencePair>& pairs, const VectorizerConfig& cfg);

/// Bar counts along cfg.omega equidistant vertical lines spanning cfg.range
/// inclusive; a bar [birth, death) counts when birth <= line < death.
FeatureVector betti_binning(const std::vector<PersistencePair>& pairs, const VectorizerConfig& cfg);

/// Ten summary statistics in fixed order: mean/std of birth, death and
/// lifespan, then medians of the three, then the bar count. Population
/// standard deviation; the median of an even count is the midpoint.
FeatureVector barcode_statistics(const std::vector<PersistencePair>& pairs);

/// Dispatch on cfg.method.
FeatureVector vectorize(const std::vector<PersistencePair>& pairs, const VectorizerConfig& cfg);

} // namespace topofeat

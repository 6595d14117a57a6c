#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "topofeat/image.hpp"
#include "topofeat/ulbp.hpp"

namespace topofeat {

struct DistanceMatrix {
    std::size_t n = 0;
    std::vector<double> d; // n*n, symmetric, zero diagonal

    double at(std::size_t i, std::size_t j) const { return d[i * n + j]; }
};

inline constexpr double kInfiniteDeath = std::numeric_limits<double>::infinity();

struct PersistencePair {
    double birth = 0.0;
    double death = 0.0;

    bool is_infinite() const { return death == kInfiniteDeath; }
    bool operator==(const PersistencePair&) const = default;
};

enum class FinitizePolicy { Cap, Drop };

/// Persistence diagram in dimensions 0 and 1. scale_max is the largest
/// filtration value examined (the VR epsilon cap, or the maximum pixel value
/// for a cubical filtration). Pairs are sorted by (birth, death), infinite
/// deaths last; zero-length pairs are never present.
struct PersistenceDiagram {
    std::vector<PersistencePair> dim0;
    std::vector<PersistencePair> dim1;
    double scale_max = 0.0;
    std::optional<FinitizePolicy> finitized;
};

/// One cell of a filtration: dimension 0, 1 or 2, a filtration value, and the
/// indices of its codimension-1 faces earlier in the order. Cells are sorted
/// by (value, dimension, lexicographic cell index).
struct FiltrationCell {
    double value = 0.0;
    std::array<std::uint32_t, 4> faces{};
    std::uint8_t n_faces = 0;
    std::uint8_t dim = 0;
};

struct Filtration {
    std::vector<FiltrationCell> cells;
    double scale_max = 0.0;
};

/// Euclidean distances between pixel coordinates. Throws EmptyCloud.
DistanceMatrix pairwise_distances(const PointCloud& cloud);

double max_pairwise_distance(const DistanceMatrix& d);

/// Vietoris-Rips filtration up to dimension 2: vertices at 0, edges at their
/// distance when <= eps_max, triangles at the maximum of their three edge
/// values (clique rule) when that maximum is <= eps_max.
Filtration vr_filtration(const DistanceMatrix& d, double eps_max);

/// Sublevel cubical filtration of a grayscale image: pixels are top cells at
/// their value and every lower face gets the minimum over the top cells it
/// bounds. A 1xN or Nx1 image uses pixels as 1-cubes, a 1x1 image a single
/// vertex.
Filtration cubical_filtration(const GrayImage& img);

/// Persistence pairs over Z/2 by boundary-matrix reduction: dimension 0 via
/// union-find with the elder rule, dimension 1 by reducing the columns of the
/// 2-cells. Unpaired creators become infinite pairs; zero-length pairs are
/// discarded. Throws InvalidFiltration when the cell order is inconsistent.
PersistenceDiagram compute_persistence(const Filtration& f);

/// Replaces infinite deaths: Cap substitutes the diagram's scale_max (pairs
/// that become zero-length are dropped), Drop removes infinite pairs.
PersistenceDiagram finitize(const PersistenceDiagram& pd, FinitizePolicy policy);

struct SubsampleResult {
    PointCloud cloud;
    std::size_t original_n = 0;
    bool subsampled = false;
};

/// Deterministic guard for large clouds: keeps every ceil(n/n_max)-th point in
/// scan order when the cloud exceeds n_max.
SubsampleResult subsample_cloud(const PointCloud& cloud, std::size_t n_max);

} // namespace topofeat

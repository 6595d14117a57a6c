#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "topofeat/image.hpp"

namespace topofeat {

/// 8-bit local binary pattern code. Bit i (1-based) is the comparison result
/// for the i-th neighbor of a 3x3 patch, traversed clockwise from the top-left:
/// top-left, top, top-right, right, bottom-right, bottom, bottom-left, left.
/// Stored so that bit i occupies byte bit (i-1); the byte value is therefore
/// the decimal code sum(bit_i * 2^(i-1)).
struct LbpCode {
    std::uint8_t bits = 0;

    bool bit(int i) const { return (bits >> (i - 1)) & 1; } // i in 1..8

    bool operator==(const LbpCode&) const = default;
};

/// Addresses one of the 56 two-transition uniform codes: lambda = number of
/// ones (geometry group, 1..7), xi = rotation index within the group (1..8).
struct GeometrySelector {
    int lambda = 1;
    int xi = 1;

    bool operator==(const GeometrySelector&) const = default;
};

struct Point {
    int x = 0; // column
    int y = 0; // row
    bool operator==(const Point&) const = default;
};

struct PointCloud {
    std::vector<Point> points;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
};

enum class CodeClass { UniformFlat, UniformTwo, NonUniform };

struct UlbpEntry {
    LbpCode code;
    CodeClass cls;
    std::optional<GeometrySelector> selector; // set iff cls == UniformTwo
};

/// Code of a 3x3 patch given row-major (top row first). Ties compare as 1:
/// bit i = 1 iff neighbor_i - center >= 0.
LbpCode lbp_code(const std::array<std::uint8_t, 9>& patch);

/// Decimal value in [0, 255] under the 2^(i-1) weight convention.
int lbp_decimal(LbpCode code);

/// Number of cyclically adjacent bit pairs that differ; always even.
int circular_transitions(LbpCode code);

/// Bit string written b1..b8 left to right, e.g. lambda=1 xi=1 -> "00000001".
std::string to_string(LbpCode code);
std::optional<LbpCode> code_from_string(const std::string& s);

/// Canonical code of a selector: R1 has lambda ones in the last lambda string
/// positions; R_xi is R1 circularly left-rotated (string-wise) by xi - 1.
LbpCode canonical_code(GeometrySelector sel);

/// Selector for a code with exactly two circular transitions, nullopt otherwise.
std::optional<GeometrySelector> geometry_of(LbpCode code);

/// All 256 codes with their uniform-LBP classification; 58 uniform, of which
/// 56 have two transitions and partition into 7 geometries x 8 rotations.
std::vector<UlbpEntry> ulbp_table();

/// The 56 two-transition selectors in (lambda asc, xi asc) order.
std::vector<GeometrySelector> all_selectors();

std::string to_string(GeometrySelector sel); // "G3R1"
std::optional<GeometrySelector> selector_from_string(const std::string& s);

/// Code at image pixel (x, y) where patch values outside the image read 0
/// (one ring of zero padding, so every pixel is a patch center once).
LbpCode lbp_code_at(const GrayImage& img, int x, int y);

/// Pixel coordinates whose patch code equals the selector's canonical code,
/// in row-major scan order.
PointCloud extract_landmarks(const GrayImage& img, GeometrySelector sel);

} // namespace topofeat

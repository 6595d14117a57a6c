#include "topofeat/ulbp.hpp"

#include <bit>

namespace topofeat {

namespace {

// String-wise left rotation by one position: new bit i = old bit i+1, which is
// a rotate-right of the storage byte.
std::uint8_t rotate_code_left(std::uint8_t b, int by) {
    by &= 7;
    return static_cast<std::uint8_t>((b >> by) | (b << (8 - by)));
}

// byte -> packed (lambda, xi), or -1 for codes without exactly two transitions
const std::array<int, 256>& selector_lookup() {
    static const std::array<int, 256> table = [] {
        std::array<int, 256> t{};
        t.fill(-1);
        for (int lambda = 1; lambda <= 7; ++lambda) {
            for (int xi = 1; xi <= 8; ++xi) {
                const LbpCode c = canonical_code({lambda, xi});
                t[c.bits] = (lambda << 3) | (xi - 1);
            }
        }
        return t;
    }();
    return table;
}

} // namespace

LbpCode lbp_code(const std::array<std::uint8_t, 9>& patch) {
    // Row-major patch; clockwise neighbor order starting at the top-left cell.
    static constexpr int kNeighbor[8] = {0, 1, 2, 5, 8, 7, 6, 3};
    const int center = patch[4];
    std::uint8_t bits = 0;
    for (int i = 0; i < 8; ++i) {
        if (patch[kNeighbor[i]] - center >= 0) bits |= static_cast<std::uint8_t>(1u << i);
    }
    return {bits};
}

int lbp_decimal(LbpCode code) { return code.bits; }

int circular_transitions(LbpCode code) {
    return std::popcount(static_cast<std::uint8_t>(code.bits ^ rotate_code_left(code.bits, 1)));
}

std::string to_string(LbpCode code) {
    std::string s(8, '0');
    for (int i = 1; i <= 8; ++i) {
        if (code.bit(i)) s[i - 1] = '1';
    }
    return s;
}

std::optional<LbpCode> code_from_string(const std::string& s) {
    if (s.size() != 8) return std::nullopt;
    std::uint8_t bits = 0;
    for (int i = 0; i < 8; ++i) {
        if (s[i] == '1') {
            bits |= static_cast<std::uint8_t>(1u << i);
        } else if (s[i] != '0') {
            return std::nullopt;
        }
    }
    return LbpCode{bits};
}

LbpCode canonical_code(GeometrySelector sel) {
    const auto r1 = static_cast<std::uint8_t>(((1u << sel.lambda) - 1u) << (8 - sel.lambda));
    return {rotate_code_left(r1, sel.xi - 1)};
}

std::optional<GeometrySelector> geometry_of(LbpCode code) {
    const int packed = selector_lookup()[code.bits];
    if (packed < 0) return std::nullopt;
    return GeometrySelector{packed >> 3, (packed & 7) + 1};
}

std::vector<UlbpEntry> ulbp_table() {
    std::vector<UlbpEntry> table;
    table.reserve(256);
    for (int v = 0; v < 256; ++v) {
        const LbpCode code{static_cast<std::uint8_t>(v)};
        const int transitions = circular_transitions(code);
        UlbpEntry entry{code, CodeClass::NonUniform, std::nullopt};
        if (transitions == 0) {
            entry.cls = CodeClass::UniformFlat;
        } else if (transitions == 2) {
            entry.cls = CodeClass::UniformTwo;
            entry.selector = geometry_of(code);
        }
        table.push_back(entry);
    }
    return table;
}

std::vector<GeometrySelector> all_selectors() {
    std::vector<GeometrySelector> out;
    out.reserve(56);
    for (int lambda = 1; lambda <= 7; ++lambda)
        for (int xi = 1; xi <= 8; ++xi) out.push_back({lambda, xi});
    return out;
}

std::string to_string(GeometrySelector sel) {
    return "G" + std::to_string(sel.lambda) + "R" + std::to_string(sel.xi);
}

std::optional<GeometrySelector> selector_from_string(const std::string& s) {
    if (s.size() != 4 || s[0] != 'G' || s[2] != 'R') return std::nullopt;
    const int lambda = s[1] - '0';
    const int xi = s[3] - '0';
    if (lambda < 1 || lambda > 7 || xi < 1 || xi > 8) return std::nullopt;
    return GeometrySelector{lambda, xi};
}

LbpCode lbp_code_at(const GrayImage& img, int x, int y) {
    std::array<std::uint8_t, 9> patch{};
    int k = 0;
    for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx, ++k) {
            const int px = x + dx, py = y + dy;
            patch[k] = img.in_bounds(px, py) ? img.at(px, py) : std::uint8_t{0};
        }
    }
    return lbp_code(patch);
}

PointCloud extract_landmarks(const GrayImage& img, GeometrySelector sel) {
    const LbpCode target = canonical_code(sel);
    PointCloud cloud;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            if (lbp_code_at(img, x, y) == target) cloud.points.push_back({x, y});
        }
    }
    return cloud;
}

} // namespace topofeat

#include "topofeat/persistence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "topofeat/errors.hpp"

namespace topofeat {

namespace {

void sort_pairs(std::vector<PersistencePair>& pairs) {
    std::stable_sort(pairs.begin(), pairs.end(), [](const PersistencePair& a, const PersistencePair& b) {
        if (a.birth != b.birth) return a.birth < b.birth;
        return a.death < b.death;
    });
}

// Proto-cells carry their defining indices so boundary positions can be
// resolved after the (value, dim, lex) sort.
struct ProtoCell {
    double value;
    std::uint32_t a, b, c;
    std::uint8_t dim;
};

void sort_cells(std::vector<ProtoCell>& cells) {
    // Construction order is lexicographic within each dimension, so a stable
    // sort on (value, dim) realizes the (value, dim, lex index) order.
    std::stable_sort(cells.begin(), cells.end(), [](const ProtoCell& x, const ProtoCell& y) {
        if (x.value != y.value) return x.value < y.value;
        return x.dim < y.dim;
    });
}

} // namespace

DistanceMatrix pairwise_distances(const PointCloud& cloud) {
    const std::size_t n = cloud.points.size();
    if (n == 0) throw EmptyCloud();
    DistanceMatrix m;
    m.n = n;
    m.d.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = cloud.points[i].x - cloud.points[j].x;
            const double dy = cloud.points[i].y - cloud.points[j].y;
            const double dist = std::sqrt(dx * dx + dy * dy);
            m.d[i * n + j] = dist;
            m.d[j * n + i] = dist;
        }
    }
    return m;
}

double max_pairwise_distance(const DistanceMatrix& d) {
    double best = 0.0;
    for (double v : d.d) best = std::max(best, v);
    return best;
}

Filtration vr_filtration(const DistanceMatrix& d, double eps_max) {
    const std::uint32_t n = static_cast<std::uint32_t>(d.n);
    std::vector<ProtoCell> cells;
    cells.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) cells.push_back({0.0, i, 0, 0, 0});
    for (std::uint32_t i = 0; i < n; ++i) {
        for (std::uint32_t j = i + 1; j < n; ++j) {
            const double dij = d.at(i, j);
            if (dij <= eps_max) cells.push_back({dij, i, j, 0, 1});
        }
    }
    for (std::uint32_t i = 0; i < n; ++i) {
        for (std::uint32_t j = i + 1; j < n; ++j) {
            const double dij = d.at(i, j);
            if (dij > eps_max) continue;
            for (std::uint32_t k = j + 1; k < n; ++k) {
                const double value = std::max({dij, d.at(i, k), d.at(j, k)});
                if (value <= eps_max) cells.push_back({value, i, j, k, 2});
            }
        }
    }
    sort_cells(cells);

    std::vector<std::uint32_t> vertex_pos(n);
    std::unordered_map<std::uint64_t, std::uint32_t> edge_pos;
    const auto edge_key = [n](std::uint32_t i, std::uint32_t j) {
        return static_cast<std::uint64_t>(i) * n + j;
    };
    for (std::uint32_t pos = 0; pos < cells.size(); ++pos) {
        const ProtoCell& cell = cells[pos];
        if (cell.dim == 0) {
            vertex_pos[cell.a] = pos;
        } else if (cell.dim == 1) {
            edge_pos[edge_key(cell.a, cell.b)] = pos;
        }
    }

    Filtration f;
    f.scale_max = eps_max;
    f.cells.resize(cells.size());
    for (std::uint32_t pos = 0; pos < cells.size(); ++pos) {
        const ProtoCell& cell = cells[pos];
        FiltrationCell& out = f.cells[pos];
        out.value = cell.value;
        out.dim = cell.dim;
        if (cell.dim == 1) {
            out.n_faces = 2;
            out.faces = {vertex_pos[cell.a], vertex_pos[cell.b], 0, 0};
        } else if (cell.dim == 2) {
            out.n_faces = 3;
            out.faces = {edge_pos.at(edge_key(cell.a, cell.b)), edge_pos.at(edge_key(cell.a, cell.c)),
                         edge_pos.at(edge_key(cell.b, cell.c)), 0};
        }
    }
    return f;
}

Filtration cubical_filtration(const GrayImage& img) {
    const int w = img.width, h = img.height;
    std::vector<ProtoCell> cells;

    if (w == 1 && h == 1) {
        Filtration f;
        f.scale_max = img.at(0, 0);
        f.cells.push_back({static_cast<double>(img.at(0, 0)), {}, 0, 0});
        return f;
    }

    if (w == 1 || h == 1) {
        // Path of pixel segments: pixel p is a 1-cube, vertex v joins
        // consecutive pixels and takes the minimum of its incident segments.
        const int n = w * h;
        const auto pixel = [&](int p) { return static_cast<double>(img.pixels[p]); };
        for (int v = 0; v <= n; ++v) {
            double value = std::numeric_limits<double>::infinity();
            if (v > 0) value = std::min(value, pixel(v - 1));
            if (v < n) value = std::min(value, pixel(v));
            cells.push_back({value, static_cast<std::uint32_t>(v), 0, 0, 0});
        }
        for (int p = 0; p < n; ++p)
            cells.push_back({pixel(p), static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(p + 1), 0, 1});
        sort_cells(cells);

        std::vector<std::uint32_t> vertex_pos(n + 1);
        for (std::uint32_t pos = 0; pos < cells.size(); ++pos)
            if (cells[pos].dim == 0) vertex_pos[cells[pos].a] = pos;

        Filtration f;
        f.scale_max = *std::max_element(img.pixels.begin(), img.pixels.end());
        f.cells.resize(cells.size());
        for (std::uint32_t pos = 0; pos < cells.size(); ++pos) {
            const ProtoCell& cell = cells[pos];
            FiltrationCell& out = f.cells[pos];
            out.value = cell.value;
            out.dim = cell.dim;
            if (cell.dim == 1) {
                out.n_faces = 2;
                out.faces = {vertex_pos[cell.a], vertex_pos[cell.b], 0, 0};
            }
        }
        return f;
    }

    // Full 2D grid: squares are pixels, lower cells take the minimum over the
    // squares they bound. Cell ids pack the lattice coordinate per kind.
    const auto pixel = [&](int x, int y) { return static_cast<double>(img.at(x, y)); };
    const auto square_min = [&](int x, int y) {
        double value = std::numeric_limits<double>::infinity();
        if (x >= 0 && x < w && y >= 0 && y < h) value = pixel(x, y);
        return value;
    };

    // Vertices: (w+1)x(h+1) lattice corners, min over up to four pixels.
    for (int y = 0; y <= h; ++y) {
        for (int x = 0; x <= w; ++x) {
            const double value = std::min({square_min(x - 1, y - 1), square_min(x, y - 1),
                                           square_min(x - 1, y), square_min(x, y)});
            cells.push_back({value, static_cast<std::uint32_t>(y * (w + 1) + x), 0, 0, 0});
        }
    }
    // Horizontal edges at lattice row y, spanning x..x+1: bound by the pixels
    // above and below that row.
    const std::uint32_t h_edge_base = 0;
    const std::uint32_t v_edge_base = static_cast<std::uint32_t>(w * (h + 1));
    for (int y = 0; y <= h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double value = std::min(square_min(x, y - 1), square_min(x, y));
            cells.push_back({value, h_edge_base + static_cast<std::uint32_t>(y * w + x), 0, 0, 1});
        }
    }
    // Vertical edges at lattice column x, spanning y..y+1.
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x <= w; ++x) {
            const double value = std::min(square_min(x - 1, y), square_min(x, y));
            cells.push_back({value, v_edge_base + static_cast<std::uint32_t>(y * (w + 1) + x), 0, 0, 1});
        }
    }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            cells.push_back({pixel(x, y), static_cast<std::uint32_t>(y * w + x), 0, 0, 2});

    sort_cells(cells);

    std::vector<std::uint32_t> vertex_pos(static_cast<std::size_t>(w + 1) * (h + 1));
    std::vector<std::uint32_t> edge_pos(static_cast<std::size_t>(w) * (h + 1) + static_cast<std::size_t>(w + 1) * h);
    for (std::uint32_t pos = 0; pos < cells.size(); ++pos) {
        if (cells[pos].dim == 0) vertex_pos[cells[pos].a] = pos;
        if (cells[pos].dim == 1) edge_pos[cells[pos].a] = pos;
    }

    Filtration f;
    f.scale_max = *std::max_element(img.pixels.begin(), img.pixels.end());
    f.cells.resize(cells.size());
    for (std::uint32_t pos = 0; pos < cells.size(); ++pos) {
        const ProtoCell& cell = cells[pos];
        FiltrationCell& out = f.cells[pos];
        out.value = cell.value;
        out.dim = cell.dim;
        if (cell.dim == 1) {
            out.n_faces = 2;
            if (cell.a < v_edge_base) {
                const std::uint32_t id = cell.a - h_edge_base;
                const std::uint32_t y = id / w, x = id % w;
                out.faces = {vertex_pos[y * (w + 1) + x], vertex_pos[y * (w + 1) + x + 1], 0, 0};
            } else {
                const std::uint32_t id = cell.a - v_edge_base;
                const std::uint32_t y = id / (w + 1), x = id % (w + 1);
                out.faces = {vertex_pos[y * (w + 1) + x], vertex_pos[(y + 1) * (w + 1) + x], 0, 0};
            }
        } else if (cell.dim == 2) {
            const std::uint32_t y = cell.a / w, x = cell.a % w;
            out.n_faces = 4;
            out.faces = {edge_pos[h_edge_base + y * w + x], edge_pos[h_edge_base + (y + 1) * w + x],
                         edge_pos[v_edge_base + y * (w + 1) + x], edge_pos[v_edge_base + y * (w + 1) + x + 1]};
        }
    }
    return f;
}

namespace {

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n), rank_(n, 0) {
        std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    }

    std::size_t find(std::size_t i) {
        while (parent_[i] != i) {
            parent_[i] = parent_[parent_[i]];
            i = parent_[i];
        }
        return i;
    }

    std::size_t unite(std::size_t a, std::size_t b) {
        if (rank_[a] < rank_[b]) std::swap(a, b);
        parent_[b] = a;
        if (rank_[a] == rank_[b]) ++rank_[a];
        return a;
    }

private:
    std::vector<std::size_t> parent_;
    std::vector<std::uint8_t> rank_;
};

std::vector<std::uint32_t> xor_columns(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
    std::vector<std::uint32_t> out;
    out.reserve(a.size() + b.size());
    std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

} // namespace

PersistenceDiagram compute_persistence(const Filtration& f) {
    const std::size_t m = f.cells.size();
    for (std::size_t j = 0; j < m; ++j) {
        const FiltrationCell& cell = f.cells[j];
        if (j > 0 && cell.value < f.cells[j - 1].value)
            throw InvalidFiltration("values decrease along the order");
        for (int t = 0; t < cell.n_faces; ++t) {
            const std::uint32_t face = cell.faces[t];
            if (face >= j) throw InvalidFiltration("face does not precede coface");
            if (f.cells[face].dim + 1 != cell.dim) throw InvalidFiltration("face dimension mismatch");
            if (f.cells[face].value > cell.value) throw InvalidFiltration("face enters after coface");
        }
    }

    PersistenceDiagram pd;
    pd.scale_max = f.scale_max;

    UnionFind uf(m);
    std::vector<std::uint32_t> comp_creator(m); // root cell index -> creator vertex cell index
    std::vector<bool> positive_edge(m, false);

    // Reduction state for the 2-cell columns; rows are edge cell indices.
    std::vector<std::int32_t> pivot_owner(m, -1);
    std::vector<std::vector<std::uint32_t>> reduced_cols;

    for (std::size_t j = 0; j < m; ++j) {
        const FiltrationCell& cell = f.cells[j];
        if (cell.dim == 0) {
            comp_creator[j] = static_cast<std::uint32_t>(j);
        } else if (cell.dim == 1) {
            const std::size_t ra = uf.find(cell.faces[0]);
            const std::size_t rb = uf.find(cell.faces[1]);
            if (ra == rb) {
                positive_edge[j] = true;
                continue;
            }
            // Elder rule: the component created later dies at this edge.
            const std::uint32_t ca = comp_creator[ra], cb = comp_creator[rb];
            const std::uint32_t younger = std::max(ca, cb);
            const double birth = f.cells[younger].value;
            if (birth != cell.value) pd.dim0.push_back({birth, cell.value});
            const std::size_t merged = uf.unite(ra, rb);
            comp_creator[merged] = std::min(ca, cb);
        } else {
            std::vector<std::uint32_t> col(cell.faces.begin(), cell.faces.begin() + cell.n_faces);
            std::sort(col.begin(), col.end());
            while (!col.empty() && pivot_owner[col.back()] >= 0)
                col = xor_columns(col, reduced_cols[pivot_owner[col.back()]]);
            if (col.empty()) continue; // positive 2-cell; dimension-2 classes are not reported
            const std::uint32_t low = col.back();
            pivot_owner[low] = static_cast<std::int32_t>(reduced_cols.size());
            reduced_cols.push_back(std::move(col));
            const double birth = f.cells[low].value;
            if (birth != cell.value) pd.dim1.push_back({birth, cell.value});
        }
    }

    std::vector<bool> root_seen(m, false);
    for (std::size_t j = 0; j < m; ++j) {
        if (f.cells[j].dim != 0) continue;
        const std::size_t r = uf.find(j);
        if (root_seen[r]) continue;
        root_seen[r] = true;
        pd.dim0.push_back({f.cells[comp_creator[r]].value, kInfiniteDeath});
    }
    for (std::size_t j = 0; j < m; ++j) {
        if (positive_edge[j] && pivot_owner[j] < 0) pd.dim1.push_back({f.cells[j].value, kInfiniteDeath});
    }

    sort_pairs(pd.dim0);
    sort_pairs(pd.dim1);
    return pd;
}

PersistenceDiagram finitize(const PersistenceDiagram& pd, FinitizePolicy policy) {
    PersistenceDiagram out;
    out.scale_max = pd.scale_max;
    out.finitized = policy;
    const auto apply = [&](const std::vector<PersistencePair>& in, std::vector<PersistencePair>& dst) {
        for (const PersistencePair& p : in) {
            if (!p.is_infinite()) {
                dst.push_back(p);
            } else if (policy == FinitizePolicy::Cap && p.birth != pd.scale_max) {
                dst.push_back({p.birth, pd.scale_max});
            }
        }
        sort_pairs(dst);
    };
    apply(pd.dim0, out.dim0);
    apply(pd.dim1, out.dim1);
    return out;
}

SubsampleResult subsample_cloud(const PointCloud& cloud, std::size_t n_max) {
    SubsampleResult result;
    result.original_n = cloud.points.size();
    if (n_max == 0 || cloud.points.size() <= n_max) {
        result.cloud = cloud;
        return result;
    }
    const std::size_t stride = (cloud.points.size() + n_max - 1) / n_max;
    for (std::size_t i = 0; i < cloud.points.size(); i += stride) result.cloud.points.push_back(cloud.points[i]);
    result.subsampled = true;
    return result;
}

} // namespace topofeat

#include "epihom/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace epihom {

double InterfaceMesh::total_area() const {
    double a = 0.0;
    for (const auto& t : triangles) a += triangle_area(t);
    return a;
}

double InterfaceMesh::inner_area() const {
    double a = 0.0;
    for (const auto& t : triangles)
        if (t.tag == Subdomain::Inner) a += triangle_area(t);
    return a;
}

double InterfaceMesh::interface_length() const {
    double len = 0.0;
    for (const auto& e : interface_edges) len += edge_length(e);
    return len;
}

std::vector<double> InterfaceMesh::interface_weights() const {
    std::vector<double> w(interface_pairs.size(), 0.0);
    for (const auto& e : interface_edges) {
        double half = 0.5 * edge_length(e);
        w[e.pa] += half;
        w[e.pb] += half;
    }
    return w;
}

std::vector<double> InterfaceMesh::interface_angles() const {
    std::vector<double> angles(interface_pairs.size(), 0.0);
    for (int loop = 0; loop < loop_count(); ++loop) {
        Vec2 c = loop_centers[loop];
        for (int p = loop_offsets[loop]; p < loop_offsets[loop + 1]; ++p) {
            Vec2 d = vertices[interface_pairs[p].first] - c;
            angles[p] = std::atan2(d.y, d.x);
        }
    }
    return angles;
}

std::vector<Vec2> InterfaceMesh::interface_normals() const {
    std::vector<Vec2> n(interface_pairs.size(), Vec2{0.0, 0.0});
    for (const auto& e : interface_edges) {
        Vec2 en = edge_normal(e) * edge_length(e);
        n[e.pa] = n[e.pa] + en;
        n[e.pb] = n[e.pb] + en;
    }
    for (auto& v : n) v = v.normalized();
    return n;
}

namespace {

// Square boundary walked counterclockwise from the origin corner,
// side_points vertices per side.
std::vector<Vec2> square_boundary_points(double L, int side_points) {
    std::vector<Vec2> pts;
    pts.reserve(4 * side_points);
    for (int k = 0; k < side_points; ++k)
        pts.emplace_back(L * k / side_points, 0.0);
    for (int k = 0; k < side_points; ++k)
        pts.emplace_back(L, L * k / side_points);
    for (int k = 0; k < side_points; ++k)
        pts.emplace_back(L - L * k / side_points, L);
    for (int k = 0; k < side_points; ++k)
        pts.emplace_back(0.0, L - L * k / side_points);
    return pts;
}

void split_quad(std::vector<Triangle>& tris, int a, int b, int c, int d,
                const std::vector<Vec2>& verts, Subdomain tag) {
    // Counterclockwise quad a-b-c-d: a,d on the ring closer to the cell
    // center (angular index j, j+1), b,c the matching outer-ring vertices.
    // Split along the shorter diagonal.
    double diag_ac = (verts[a] - verts[c]).norm();
    double diag_bd = (verts[b] - verts[d]).norm();
    if (diag_ac <= diag_bd) {
        tris.push_back({{a, b, c}, tag});
        tris.push_back({{a, c, d}, tag});
    } else {
        tris.push_back({{a, b, d}, tag});
        tris.push_back({{b, c, d}, tag});
    }
}

// Quantized-coordinate vertex merger with 3x3 bucket probing.
class VertexMerger {
public:
    explicit VertexMerger(double tol) : tol_(tol) {}

    int insert(const Vec2& p, std::vector<Vec2>& out) {
        auto kx = static_cast<std::int64_t>(std::llround(p.x / tol_));
        auto ky = static_cast<std::int64_t>(std::llround(p.y / tol_));
        for (std::int64_t dx = -1; dx <= 1; ++dx) {
            for (std::int64_t dy = -1; dy <= 1; ++dy) {
                auto it = buckets_.find(key(kx + dx, ky + dy));
                if (it == buckets_.end()) continue;
                for (int id : it->second)
                    if ((out[id] - p).norm() <= tol_) return id;
            }
        }
        int id = static_cast<int>(out.size());
        out.push_back(p);
        buckets_[key(kx, ky)].push_back(id);
        return id;
    }

private:
    static std::uint64_t key(std::int64_t kx, std::int64_t ky) {
        return static_cast<std::uint64_t>(kx) * 0x9e3779b97f4a7c15ULL ^
               static_cast<std::uint64_t>(ky);
    }
    double tol_;
    std::unordered_map<std::uint64_t, std::vector<int>> buckets_;
};

} // namespace

InterfaceMesh build_unit_cell_mesh(const CellGeometry& geometry, double h_target) {
    geometry.validate();
    if (h_target <= 0.0)
        throw Error("config-invalid", "h_target must be positive");

    double L = geometry.unit_cell_size;
    double perimeter = geometry.perimeter();
    if (perimeter / h_target < 16.0)
        throw Error("insufficient-interface-resolution",
                    "h_target admits fewer than 16 membrane edges");

    Vec2 c = geometry.center();
    int side_points = std::max(4, static_cast<int>(std::lround(L / h_target)));

    // Grow the angular resolution until every membrane chord is under
    // 1.4*h_target, keeping the chord error below h^2/(2 R_min).
    std::vector<Vec2> boundary, membrane;
    for (int attempt = 0;; ++attempt) {
        boundary = square_boundary_points(L, side_points);
        membrane.clear();
        membrane.reserve(boundary.size());
        for (const Vec2& q : boundary) {
            Vec2 d = (q - c).normalized();
            double t = geometry.membrane_distance(d);
            if (t >= (q - c).norm())
                throw Error("cell-intersects-boundary",
                            "membrane reaches the unit-cell boundary");
            membrane.push_back(c + t * d);
        }
        double max_chord = 0.0;
        int m = static_cast<int>(membrane.size());
        for (int j = 0; j < m; ++j)
            max_chord = std::max(max_chord,
                                 (membrane[(j + 1) % m] - membrane[j]).norm());
        if (max_chord <= 1.4 * h_target || attempt >= 12) break;
        side_points = static_cast<int>(
            std::ceil(side_points * max_chord / (1.3 * h_target)));
    }

    int m = static_cast<int>(membrane.size());
    std::vector<double> t_mem(m), gap(m);
    double t_avg = 0.0, gap_avg = 0.0;
    for (int j = 0; j < m; ++j) {
        t_mem[j] = (membrane[j] - c).norm();
        gap[j] = (boundary[j] - c).norm() - t_mem[j];
        t_avg += t_mem[j];
        gap_avg += gap[j];
    }
    t_avg /= m;
    gap_avg /= m;

    int rings_in = std::max(2, static_cast<int>(std::lround(t_avg / h_target)));
    int rings_out = std::max(2, static_cast<int>(std::lround(gap_avg / h_target)));

    InterfaceMesh mesh;
    mesh.domain_size = L;
    mesh.vertices.reserve(1 + static_cast<std::size_t>(m) * (rings_in + rings_out + 1));

    mesh.vertices.push_back(c); // id 0
    // Inner rings 1..rings_in; ring rings_in is the inner membrane copy.
    for (int k = 1; k <= rings_in; ++k) {
        double rho = static_cast<double>(k) / rings_in;
        for (int j = 0; j < m; ++j)
            mesh.vertices.push_back(c + rho * (membrane[j] - c));
    }
    int base_inner_mem = 1 + (rings_in - 1) * m;
    // Outer membrane copy (same coordinates, distinct ids).
    int base_outer_mem = static_cast<int>(mesh.vertices.size());
    for (int j = 0; j < m; ++j) mesh.vertices.push_back(mesh.vertices[base_inner_mem + j]);
    // Outer rings 1..rings_out-1 between membrane and boundary.
    int base_outer_rings = static_cast<int>(mesh.vertices.size());
    for (int k = 1; k < rings_out; ++k) {
        double s = static_cast<double>(k) / rings_out;
        for (int j = 0; j < m; ++j)
            mesh.vertices.push_back(membrane[j] + s * (boundary[j] - membrane[j]));
    }
    int base_boundary = static_cast<int>(mesh.vertices.size());
    for (int j = 0; j < m; ++j) mesh.vertices.push_back(boundary[j]);

    auto inner_ring_id = [&](int k, int j) { return 1 + (k - 1) * m + (j % m); };
    auto outer_ring_id = [&](int k, int j) {
        if (k == 0) return base_outer_mem + (j % m);
        if (k == rings_out) return base_boundary + (j % m);
        return base_outer_rings + (k - 1) * m + (j % m);
    };

    mesh.triangles.reserve(static_cast<std::size_t>(m) * 2 * (rings_in + rings_out));
    for (int j = 0; j < m; ++j)
        mesh.triangles.push_back({{0, inner_ring_id(1, j), inner_ring_id(1, j + 1)},
                                  Subdomain::Inner});
    for (int k = 1; k < rings_in; ++k)
        for (int j = 0; j < m; ++j)
            split_quad(mesh.triangles, inner_ring_id(k, j), inner_ring_id(k + 1, j),
                       inner_ring_id(k + 1, j + 1), inner_ring_id(k, j + 1),
                       mesh.vertices, Subdomain::Inner);
    for (int k = 0; k < rings_out; ++k)
        for (int j = 0; j < m; ++j)
            split_quad(mesh.triangles, outer_ring_id(k, j), outer_ring_id(k + 1, j),
                       outer_ring_id(k + 1, j + 1), outer_ring_id(k, j + 1),
                       mesh.vertices, Subdomain::Outer);

    for (const auto& t : mesh.triangles)
        if (mesh.triangle_area(t) <= 0.0)
            throw Error("mesh-degenerate", "non-positive triangle area");

    mesh.interface_pairs.reserve(m);
    for (int j = 0; j < m; ++j)
        mesh.interface_pairs.emplace_back(base_inner_mem + j, base_outer_mem + j);
    mesh.interface_edges.reserve(m);
    for (int j = 0; j < m; ++j)
        mesh.interface_edges.push_back({j, (j + 1) % m});
    mesh.loop_offsets = {0, m};
    mesh.loop_centers = {c};
    mesh.boundary_vertices.reserve(4 * side_points);
    for (int j = 0; j < m; ++j) mesh.boundary_vertices.push_back(base_boundary + j);
    return mesh;
}

InterfaceMesh build_tiled_mesh(const CellGeometry& geometry, double eps,
                               double domain_size, double h_target) {
    if (eps <= 0.0 || domain_size <= 0.0)
        throw Error("config-invalid", "eps and domain_size must be positive");
    double tiles_exact = domain_size / (eps * geometry.unit_cell_size);
    int n = static_cast<int>(std::lround(tiles_exact));
    if (n < 1 || std::abs(tiles_exact - n) > 1e-9 * std::max(1.0, tiles_exact))
        throw Error("non-conforming-tiling",
                    "domain_size / (eps * L) must be a positive integer");

    InterfaceMesh unit = build_unit_cell_mesh(geometry, h_target);
    if (n == 1 && eps == 1.0) return unit;

    double tile = eps * geometry.unit_cell_size;
    InterfaceMesh mesh;
    mesh.domain_size = domain_size;
    VertexMerger merger(tile * 1e-9);
    mesh.loop_offsets.push_back(0);

    // Only vertices on the tile boundary may fuse with neighbours; interior
    // vertices (in particular the duplicated membrane copies, which share
    // coordinates on purpose) are appended verbatim.
    std::vector<char> on_tile_boundary(unit.vertices.size(), 0);
    for (int v : unit.boundary_vertices) on_tile_boundary[v] = 1;

    for (int ty = 0; ty < n; ++ty) {
        for (int tx = 0; tx < n; ++tx) {
            Vec2 offset{tx * tile, ty * tile};
            std::vector<int> remap(unit.vertices.size());
            for (std::size_t i = 0; i < unit.vertices.size(); ++i) {
                Vec2 p = unit.vertices[i] * eps + offset;
                if (on_tile_boundary[i]) {
                    remap[i] = merger.insert(p, mesh.vertices);
                } else {
                    remap[i] = static_cast<int>(mesh.vertices.size());
                    mesh.vertices.push_back(p);
                }
            }
            for (const auto& t : unit.triangles)
                mesh.triangles.push_back(
                    {{remap[t.v[0]], remap[t.v[1]], remap[t.v[2]]}, t.tag});
            int pair_base = mesh.pair_count();
            for (const auto& pr : unit.interface_pairs)
                mesh.interface_pairs.emplace_back(remap[pr.first], remap[pr.second]);
            for (const auto& e : unit.interface_edges)
                mesh.interface_edges.push_back({pair_base + e.pa, pair_base + e.pb});
            mesh.loop_offsets.push_back(mesh.pair_count());
            mesh.loop_centers.push_back(unit.loop_centers[0] * eps + offset);
        }
    }

    double tol = tile * 1e-7;
    for (int i = 0; i < static_cast<int>(mesh.vertices.size()); ++i) {
        const Vec2& p = mesh.vertices[i];
        if (p.x < tol || p.x > domain_size - tol || p.y < tol ||
            p.y > domain_size - tol)
            mesh.boundary_vertices.push_back(i);
    }
    return mesh;
}

InterfaceMesh build_square_mesh(double domain_size, double h_target) {
    if (domain_size <= 0.0 || h_target <= 0.0)
        throw Error("config-invalid", "domain_size and h_target must be positive");
    int n = std::max(1, static_cast<int>(std::lround(domain_size / h_target)));
    InterfaceMesh mesh;
    mesh.domain_size = domain_size;
    mesh.loop_offsets = {0};
    auto id = [n](int i, int j) { return j * (n + 1) + i; };
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i)
            mesh.vertices.emplace_back(domain_size * i / n, domain_size * j / n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            int a = id(i, j), b = id(i + 1, j), cc = id(i + 1, j + 1), d = id(i, j + 1);
            if ((i + j) % 2 == 0) {
                mesh.triangles.push_back({{a, b, cc}, Subdomain::Outer});
                mesh.triangles.push_back({{a, cc, d}, Subdomain::Outer});
            } else {
                mesh.triangles.push_back({{a, b, d}, Subdomain::Outer});
                mesh.triangles.push_back({{b, cc, d}, Subdomain::Outer});
            }
        }
    }
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i)
            if (i == 0 || i == n || j == 0 || j == n)
                mesh.boundary_vertices.push_back(id(i, j));
    return mesh;
}

void write_mesh(std::ostream& os, const InterfaceMesh& mesh) {
    os.precision(17);
    os << mesh.vertices.size() << "\n";
    for (const auto& v : mesh.vertices) os << v.x << " " << v.y << "\n";
    os << mesh.triangles.size() << "\n";
    for (const auto& t : mesh.triangles)
        os << t.v[0] << " " << t.v[1] << " " << t.v[2] << " "
           << (t.tag == Subdomain::Inner ? "inner" : "outer") << "\n";
    os << mesh.interface_pairs.size() << "\n";
    for (const auto& p : mesh.interface_pairs) os << p.first << " " << p.second << "\n";
}

std::string mesh_to_string(const InterfaceMesh& mesh) {
    std::ostringstream os;
    write_mesh(os, mesh);
    return os.str();
}

} // namespace epihom

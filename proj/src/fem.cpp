#include "epihom/fem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace epihom {

namespace {

// Union-find with path compression, deterministic root = smallest member.
class UnionFind {
public:
    explicit UnionFind(int n) : parent_(n) {
        std::iota(parent_.begin(), parent_.end(), 0);
    }
    int find(int a) {
        while (parent_[a] != a) {
            parent_[a] = parent_[parent_[a]];
            a = parent_[a];
        }
        return a;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (a < b) parent_[b] = a;
        else parent_[a] = b;
    }

private:
    std::vector<int> parent_;
};

} // namespace

DofMap DofMap::build(const InterfaceMesh& mesh, Interface iface, Boundary boundary) {
    int nv = static_cast<int>(mesh.vertices.size());
    UnionFind uf(nv);

    if (iface == Interface::Merged)
        for (const auto& [vin, vout] : mesh.interface_pairs) uf.unite(vin, vout);

    if (boundary == Boundary::Periodic) {
        double L = mesh.domain_size;
        // Matching tolerance: a tiny fraction of the smallest boundary spacing.
        double min_gap = L;
        const auto& bd = mesh.boundary_vertices;
        for (std::size_t i = 0; i < bd.size(); ++i)
            for (std::size_t j = i + 1; j < bd.size(); ++j) {
                double d = (mesh.vertices[bd[i]] - mesh.vertices[bd[j]]).norm();
                if (d > 0.0) min_gap = std::min(min_gap, d);
            }
        double tol = min_gap * 1e-6;
        for (int a : bd) {
            const Vec2& pa = mesh.vertices[a];
            if (std::abs(pa.x - L) < tol) {
                for (int b : bd)
                    if (std::abs(mesh.vertices[b].x) < tol &&
                        std::abs(mesh.vertices[b].y - pa.y) < tol)
                        uf.unite(a, b);
            }
            if (std::abs(pa.y - L) < tol) {
                for (int b : bd)
                    if (std::abs(mesh.vertices[b].y) < tol &&
                        std::abs(mesh.vertices[b].x - pa.x) < tol)
                        uf.unite(a, b);
            }
        }
    }

    DofMap map;
    map.vertex_to_dof_.assign(nv, -1);
    int next = 0;
    for (int v = 0; v < nv; ++v) {
        int root = uf.find(v);
        if (map.vertex_to_dof_[root] < 0) map.vertex_to_dof_[root] = next++;
        map.vertex_to_dof_[v] = map.vertex_to_dof_[root];
    }
    map.n_dofs_ = next;

    if (iface == Interface::Jump) {
        map.couples_.reserve(mesh.interface_pairs.size());
        for (const auto& [vin, vout] : mesh.interface_pairs)
            map.couples_.emplace_back(map.vertex_to_dof_[vin], map.vertex_to_dof_[vout]);
    }

    std::vector<char> seen(map.n_dofs_, 0);
    for (int v : mesh.boundary_vertices) {
        int d = map.vertex_to_dof_[v];
        if (!seen[d]) {
            seen[d] = 1;
            map.boundary_dofs_.push_back(d);
        }
    }
    std::sort(map.boundary_dofs_.begin(), map.boundary_dofs_.end());
    return map;
}

std::vector<double> DofMap::jump_values(const std::vector<double>& u) const {
    std::vector<double> v(couples_.size());
    for (std::size_t p = 0; p < couples_.size(); ++p)
        v[p] = u[couples_[p].second] - u[couples_[p].first];
    return v;
}

void DofMap::add_jump_transpose(const std::vector<double>& w,
                                std::vector<double>& out) const {
    for (std::size_t p = 0; p < couples_.size(); ++p) {
        out[couples_[p].second] += w[p];
        out[couples_[p].first] -= w[p];
    }
}

namespace {

SparseSystem assemble_p1(const InterfaceMesh& mesh, const DofMap& dofs,
                         const Mat2& coef_inner, const Mat2& coef_outer) {
    SparseSystem sys;
    sys.matrix = SparseMatrix(dofs.dof_count());
    sys.rhs.assign(dofs.dof_count(), 0.0);
    for (const auto& tri : mesh.triangles) {
        const Vec2& p0 = mesh.vertices[tri.v[0]];
        const Vec2& p1 = mesh.vertices[tri.v[1]];
        const Vec2& p2 = mesh.vertices[tri.v[2]];
        double area2 = (p1 - p0).cross(p2 - p0);
        if (area2 <= 0.0)
            throw Error("singular-element", "triangle with non-positive area");
        double area = 0.5 * area2;
        // Barycentric gradients.
        Vec2 g[3] = {{(p1.y - p2.y) / area2, (p2.x - p1.x) / area2},
                     {(p2.y - p0.y) / area2, (p0.x - p2.x) / area2},
                     {(p0.y - p1.y) / area2, (p1.x - p0.x) / area2}};
        const Mat2& C = (tri.tag == Subdomain::Inner) ? coef_inner : coef_outer;
        for (int a = 0; a < 3; ++a) {
            Vec2 Cg{C.a11 * g[a].x + C.a12 * g[a].y, C.a21 * g[a].x + C.a22 * g[a].y};
            for (int b = 0; b < 3; ++b) {
                double k = area * (Cg.x * g[b].x + Cg.y * g[b].y);
                sys.matrix.add(dofs.dof(tri.v[b]), dofs.dof(tri.v[a]), k);
            }
        }
    }
    return sys;
}

} // namespace

SparseSystem assemble_stiffness(const InterfaceMesh& mesh, const DofMap& dofs,
                                double sigma_inner, double sigma_outer) {
    if (sigma_inner <= 0.0 || sigma_outer <= 0.0)
        throw Error("config-invalid", "conductivities must be positive");
    return assemble_p1(mesh, dofs, Mat2::identity(sigma_inner),
                       Mat2::identity(sigma_outer));
}

SparseSystem assemble_stiffness_tensor(const InterfaceMesh& mesh, const DofMap& dofs,
                                       const Mat2& coefficient) {
    return assemble_p1(mesh, dofs, coefficient, coefficient);
}

SparseSystem assemble_interface_mass(const InterfaceMesh& mesh) {
    if (mesh.interface_edges.empty())
        throw Error("config-invalid", "mesh carries no interface edges");
    SparseSystem sys;
    sys.matrix = SparseMatrix(mesh.pair_count());
    sys.rhs.assign(mesh.pair_count(), 0.0);
    std::vector<double> w = mesh.interface_weights();
    for (int p = 0; p < mesh.pair_count(); ++p) sys.matrix.add(p, p, w[p]);
    return sys;
}

std::vector<double> solve(SparseSystem& system, double tol,
                          const std::vector<double>* initial_guess) {
    system.finalize();
    CgOptions opts;
    opts.tol = tol;
    opts.initial_guess = initial_guess;
    return cg_solve(system.matrix, system.rhs, opts);
}

} // namespace epihom

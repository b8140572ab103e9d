#include "epihom/homogenization.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_map>

#include "epihom/eig2.hpp"
#include "epihom/fem.hpp"
#include "epihom/transmission.hpp"

namespace epihom {

namespace {

Vec2 p1_gradient(const InterfaceMesh& mesh, const Triangle& t,
                 const std::vector<double>& vertex_values) {
    const Vec2& p0 = mesh.vertices[t.v[0]];
    const Vec2& p1 = mesh.vertices[t.v[1]];
    const Vec2& p2 = mesh.vertices[t.v[2]];
    double area2 = (p1 - p0).cross(p2 - p0);
    double u0 = vertex_values[t.v[0]], u1 = vertex_values[t.v[1]], u2 = vertex_values[t.v[2]];
    return {(u0 * (p1.y - p2.y) + u1 * (p2.y - p0.y) + u2 * (p0.y - p1.y)) / area2,
            (u0 * (p2.x - p1.x) + u1 * (p0.x - p2.x) + u2 * (p1.x - p0.x)) / area2};
}

std::vector<double> to_vertex_field(const InterfaceMesh& mesh, const DofMap& dofs,
                                    const std::vector<double>& dof_values) {
    std::vector<double> out(mesh.vertices.size());
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
        out[v] = dof_values[dofs.dof(static_cast<int>(v))];
    return out;
}

void check_uniform_grid(const std::vector<double>& t_grid) {
    if (t_grid.size() < 2)
        throw Error("config-invalid", "time grid needs at least two samples");
    double dt = t_grid[1] - t_grid[0];
    if (!(dt > 0.0)) throw Error("config-invalid", "time grid must increase");
    for (std::size_t k = 1; k < t_grid.size(); ++k) {
        double step = t_grid[k] - t_grid[k - 1];
        if (std::abs(step - dt) > 1e-9 * dt)
            throw Error("config-invalid", "time grid must be uniform");
    }
}

struct EdgeKey {
    int a, b;
    bool operator==(const EdgeKey& o) const { return a == o.a && b == o.b; }
};
struct EdgeKeyHash {
    std::size_t operator()(const EdgeKey& k) const {
        return std::hash<long long>()((static_cast<long long>(k.a) << 32) ^ k.b);
    }
};

// Map each interface edge to its adjacent inner triangle.
std::vector<int> inner_triangle_of_edges(const InterfaceMesh& mesh) {
    std::unordered_map<EdgeKey, int, EdgeKeyHash> edge_to_tri;
    for (std::size_t ti = 0; ti < mesh.triangles.size(); ++ti) {
        const Triangle& t = mesh.triangles[ti];
        if (t.tag != Subdomain::Inner) continue;
        for (int k = 0; k < 3; ++k) {
            int a = t.v[k], b = t.v[(k + 1) % 3];
            edge_to_tri[{std::min(a, b), std::max(a, b)}] = static_cast<int>(ti);
        }
    }
    std::vector<int> out;
    out.reserve(mesh.interface_edges.size());
    for (const auto& e : mesh.interface_edges) {
        int a = mesh.interface_pairs[e.pa].first;
        int b = mesh.interface_pairs[e.pb].first;
        auto it = edge_to_tri.find({std::min(a, b), std::max(a, b)});
        if (it == edge_to_tri.end())
            throw Error("internal", "interface edge without inner triangle");
        out.push_back(it->second);
    }
    return out;
}

} // namespace

CorrectorSolution solve_cell_correctors(const InterfaceMesh& mesh, double sigma_i,
                                        double sigma_e, double tol) {
    DofMap dofs = DofMap::build(mesh, DofMap::Interface::Merged,
                                DofMap::Boundary::Periodic);
    SparseSystem sys = assemble_stiffness(mesh, dofs, sigma_i, sigma_e);
    sys.matrix.finalize();
    std::vector<std::pair<int, double>> pin{{dofs.dof(0), 0.0}};
    std::vector<double> dummy(dofs.dof_count(), 0.0);
    sys.matrix.eliminate_dirichlet(pin, dummy);

    std::vector<double> lumped(dofs.dof_count(), 0.0);
    double total_area = 0.0;
    for (const auto& t : mesh.triangles) {
        double third = mesh.triangle_area(t) / 3.0;
        for (int k = 0; k < 3; ++k) lumped[dofs.dof(t.v[k])] += third;
        total_area += 3.0 * third;
    }

    CorrectorSolution out;
    std::vector<int> edge_tri = inner_triangle_of_edges(mesh);
    std::vector<double> weights = mesh.interface_weights();

    for (int h = 0; h < 2; ++h) {
        // Load: integral of sigma e_h . grad(test).
        std::vector<double> rhs(dofs.dof_count(), 0.0);
        for (const auto& t : mesh.triangles) {
            const Vec2& p0 = mesh.vertices[t.v[0]];
            const Vec2& p1 = mesh.vertices[t.v[1]];
            const Vec2& p2 = mesh.vertices[t.v[2]];
            double area2 = (p1 - p0).cross(p2 - p0);
            double area = 0.5 * area2;
            double sigma = (t.tag == Subdomain::Inner) ? sigma_i : sigma_e;
            Vec2 g[3] = {{(p1.y - p2.y) / area2, (p2.x - p1.x) / area2},
                         {(p2.y - p0.y) / area2, (p0.x - p2.x) / area2},
                         {(p0.y - p1.y) / area2, (p1.x - p0.x) / area2}};
            for (int k = 0; k < 3; ++k) {
                double load = sigma * area * (h == 0 ? g[k].x : g[k].y);
                rhs[dofs.dof(t.v[k])] += load;
            }
        }
        rhs[dofs.dof(0)] = 0.0;  // pinned gauge

        CgOptions cg;
        cg.tol = tol;
        std::vector<double> chi;
        try {
            chi = cg_solve(sys.matrix, rhs, cg);
        } catch (const Error& e) {
            throw Error("cell-problem-singular", e.what());
        }

        double mean = 0.0;
        for (int d = 0; d < dofs.dof_count(); ++d) mean += lumped[d] * chi[d];
        mean /= total_area;
        for (double& v : chi) v -= mean;

        out.chi0[h] = to_vertex_field(mesh, dofs, chi);

        // Edge-wise membrane flux sigma_i (grad chi - e_h) . n, averaged onto
        // the interface nodes with the chord half-lengths.
        std::vector<double> nodal(mesh.pair_count(), 0.0);
        for (std::size_t ei = 0; ei < mesh.interface_edges.size(); ++ei) {
            const auto& e = mesh.interface_edges[ei];
            const Triangle& t = mesh.triangles[edge_tri[ei]];
            Vec2 grad = p1_gradient(mesh, t, out.chi0[h]);
            Vec2 n = mesh.edge_normal(e);
            double eh_n = (h == 0) ? n.x : n.y;
            double s = sigma_i * (grad.dot(n) - eh_n);
            double half = 0.5 * mesh.edge_length(e);
            nodal[e.pa] += half * s;
            nodal[e.pb] += half * s;
        }
        for (int p = 0; p < mesh.pair_count(); ++p) nodal[p] /= weights[p];
        out.flux_trace[h] = std::move(nodal);
    }
    return out;
}

double rest_membrane_conductivity(const ModelParams& params) {
    return params.sigma_m0 + params.beta * params.N0;
}

TransformResult relaxation_transform(const InterfaceMesh& mesh,
                                     const ModelParams& params,
                                     const std::vector<double>& initial_jump,
                                     const std::vector<double>& t_grid, double tol) {
    check_uniform_grid(t_grid);
    DofMap dofs = DofMap::build(mesh, DofMap::Interface::Jump,
                                DofMap::Boundary::Periodic);
    TransmissionStepper::Options opt;
    opt.capacitance_over_delta = params.c_m / params.delta;
    opt.dt = t_grid[1] - t_grid[0];
    opt.solver_tol = tol;
    opt.boundary = DofMap::Boundary::Periodic;
    opt.pin_dof = dofs.dof(0);
    opt.zero_mean_shift = true;
    TransmissionStepper stepper(mesh, dofs, params.sigma_i, params.sigma_e, opt);

    double sm_rest = rest_membrane_conductivity(params);
    std::vector<double> relax(mesh.pair_count(), sm_rest / params.delta);

    TransformResult out;
    out.t_grid = t_grid;
    out.fields.reserve(t_grid.size());

    stepper.solve_prescribed_jump(initial_jump);
    out.fields.push_back(to_vertex_field(mesh, dofs, stepper.field()));
    std::vector<double> v = initial_jump;
    for (std::size_t k = 1; k < t_grid.size(); ++k) {
        v = stepper.advance(v, relax);
        out.fields.push_back(to_vertex_field(mesh, dofs, stepper.field()));
    }
    return out;
}

MemoryCorrector compute_memory_corrector(const InterfaceMesh& mesh,
                                         const ModelParams& params,
                                         const CorrectorSolution& correctors,
                                         const std::vector<double>& t_grid,
                                         double tol) {
    MemoryCorrector out;
    out.t_grid = t_grid;
    double scale = params.delta / params.c_m;
    for (int h = 0; h < 2; ++h) {
        std::vector<double> s = correctors.flux_trace[h];
        for (double& x : s) x *= scale;
        TransformResult tr = relaxation_transform(mesh, params, s, t_grid, tol);
        out.fields[h] = std::move(tr.fields);
    }
    return out;
}

namespace {

// Edge-wise trapezoid of g(node) * n_j over the membrane; g given per pair.
Vec2 interface_integral(const InterfaceMesh& mesh, const std::vector<double>& g) {
    Vec2 acc{0.0, 0.0};
    for (const auto& e : mesh.interface_edges) {
        Vec2 n = mesh.edge_normal(e);
        double half = 0.5 * mesh.edge_length(e);
        double sum = g[e.pa] + g[e.pb];
        acc.x += half * sum * n.x;
        acc.y += half * sum * n.y;
    }
    return acc;
}

} // namespace

EffectiveTensors effective_tensors(const InterfaceMesh& mesh,
                                   const CorrectorSolution& correctors,
                                   const MemoryCorrector& memory,
                                   const ModelParams& params,
                                   const TransformResult* transformed_s1) {
    EffectiveTensors out;
    double area_total = mesh.total_area();
    double area_in = mesh.inner_area();
    double f = area_in / area_total;
    out.sigma0 = params.sigma_i * f + params.sigma_e * (1.0 - f);

    double jump_sigma = params.sigma_e - params.sigma_i;  // outer minus inner

    // A0_{jh} = (1/|Y|) int_Gamma [sigma] chi0_h n_j dS (chi0 continuous).
    for (int h = 0; h < 2; ++h) {
        std::vector<double> g(mesh.pair_count());
        for (int p = 0; p < mesh.pair_count(); ++p)
            g[p] = jump_sigma * correctors.chi0[h][mesh.interface_pairs[p].first];
        Vec2 col = interface_integral(mesh, g) * (1.0 / area_total);
        if (h == 0) {
            out.A0.a11 = col.x;
            out.A0.a21 = col.y;
        } else {
            out.A0.a12 = col.x;
            out.A0.a22 = col.y;
        }
    }

    // A1_{jh}(t_k) = (1/|Y|) int_Gamma [sigma chi1_h] n_j dS with the jump
    // convention sigma_e chi^+ - sigma_i chi^-.
    out.t_grid = memory.t_grid;
    out.A1.reserve(memory.t_grid.size());
    for (std::size_t k = 0; k < memory.t_grid.size(); ++k) {
        Mat2 a1;
        for (int h = 0; h < 2; ++h) {
            std::vector<double> g(mesh.pair_count());
            for (int p = 0; p < mesh.pair_count(); ++p) {
                auto [vin, vout] = mesh.interface_pairs[p];
                g[p] = params.sigma_e * memory.fields[h][k][vout] -
                       params.sigma_i * memory.fields[h][k][vin];
            }
            Vec2 col = interface_integral(mesh, g) * (1.0 / area_total);
            if (h == 0) {
                a1.a11 = col.x;
                a1.a21 = col.y;
            } else {
                a1.a12 = col.x;
                a1.a22 = col.y;
            }
        }
        out.A1.push_back(a1);
    }

    if (transformed_s1) {
        out.F.reserve(transformed_s1->fields.size());
        for (const auto& field : transformed_s1->fields) {
            std::vector<double> g(mesh.pair_count());
            for (int p = 0; p < mesh.pair_count(); ++p) {
                auto [vin, vout] = mesh.interface_pairs[p];
                g[p] = params.sigma_e * field[vout] - params.sigma_i * field[vin];
            }
            out.F.push_back(interface_integral(mesh, g) * (1.0 / area_total));
        }
    }
    return out;
}

double membrane_relaxation_time(const CellGeometry& geometry,
                                const ModelParams& params) {
    double sm = rest_membrane_conductivity(params);
    double r_eff = std::sqrt(geometry.axis_a() * geometry.axis_b());
    // Series coupling of the inner/outer Steklov responses of the slowest
    // (dipole) interface mode, sigma_i sigma_e / (sigma_i + sigma_e) / r.
    double bulk = params.sigma_i * params.sigma_e /
                  (params.sigma_i + params.sigma_e) / r_eff;
    return params.c_m / (sm + params.delta * bulk);
}

std::vector<double> kernel_time_grid(const CellGeometry& geometry,
                                     const ModelParams& params, int samples) {
    if (samples < 2) throw Error("config-invalid", "kernel grid needs >= 2 samples");
    double horizon = 5.0 * membrane_relaxation_time(geometry, params);
    std::vector<double> grid(samples);
    for (int k = 0; k < samples; ++k)
        grid[k] = horizon * k / (samples - 1);
    return grid;
}

FieldSampler::FieldSampler(const InterfaceMesh& mesh) : mesh_(&mesh) {
    bins_ = std::max(1, static_cast<int>(std::sqrt(mesh.triangles.size() / 2.0)));
    cell_ = mesh.domain_size / bins_;
    grid_.assign(static_cast<std::size_t>(bins_) * bins_, {});
    for (std::size_t ti = 0; ti < mesh.triangles.size(); ++ti) {
        const Triangle& t = mesh.triangles[ti];
        double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
        for (int k = 0; k < 3; ++k) {
            const Vec2& p = mesh.vertices[t.v[k]];
            xmin = std::min(xmin, p.x);
            xmax = std::max(xmax, p.x);
            ymin = std::min(ymin, p.y);
            ymax = std::max(ymax, p.y);
        }
        int i0 = std::clamp(static_cast<int>(xmin / cell_), 0, bins_ - 1);
        int i1 = std::clamp(static_cast<int>(xmax / cell_), 0, bins_ - 1);
        int j0 = std::clamp(static_cast<int>(ymin / cell_), 0, bins_ - 1);
        int j1 = std::clamp(static_cast<int>(ymax / cell_), 0, bins_ - 1);
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i)
                grid_[static_cast<std::size_t>(j) * bins_ + i].push_back(
                    static_cast<int>(ti));
    }
}

int FieldSampler::locate(const Vec2& p) const {
    int i = std::clamp(static_cast<int>(p.x / cell_), 0, bins_ - 1);
    int j = std::clamp(static_cast<int>(p.y / cell_), 0, bins_ - 1);
    for (int ti : grid_[static_cast<std::size_t>(j) * bins_ + i]) {
        const Triangle& t = mesh_->triangles[ti];
        const Vec2& p0 = mesh_->vertices[t.v[0]];
        const Vec2& p1 = mesh_->vertices[t.v[1]];
        const Vec2& p2 = mesh_->vertices[t.v[2]];
        double area2 = (p1 - p0).cross(p2 - p0);
        double l0 = (p1 - p).cross(p2 - p) / area2;
        double l1 = (p2 - p).cross(p0 - p) / area2;
        double l2 = 1.0 - l0 - l1;
        double tol = -1e-10;
        if (l0 >= tol && l1 >= tol && l2 >= tol) return ti;
    }
    return -1;
}

double FieldSampler::evaluate_in(int triangle, const std::vector<double>& vertex_values,
                                 const Vec2& p) const {
    const Triangle& t = mesh_->triangles[triangle];
    const Vec2& p0 = mesh_->vertices[t.v[0]];
    const Vec2& p1 = mesh_->vertices[t.v[1]];
    const Vec2& p2 = mesh_->vertices[t.v[2]];
    double area2 = (p1 - p0).cross(p2 - p0);
    double l0 = (p1 - p).cross(p2 - p) / area2;
    double l1 = (p2 - p).cross(p0 - p) / area2;
    double l2 = 1.0 - l0 - l1;
    return l0 * vertex_values[t.v[0]] + l1 * vertex_values[t.v[1]] +
           l2 * vertex_values[t.v[2]];
}

double FieldSampler::evaluate(const std::vector<double>& vertex_values,
                              const Vec2& p) const {
    int ti = locate(p);
    if (ti < 0) throw Error("internal", "sample point outside the mesh");
    return evaluate_in(ti, vertex_values, p);
}

MacroSolution solve_macro(const InterfaceMesh& macro_mesh,
                          const EffectiveTensors& tensors,
                          const std::function<double(Vec2)>& source_modulation,
                          const AffineField& boundary,
                          const std::vector<double>& t_grid, double tol) {
    check_uniform_grid(t_grid);
    double dt = t_grid[1] - t_grid[0];
    bool with_kernel = !tensors.A1.empty();
    if (with_kernel && tensors.A1.size() < t_grid.size())
        throw Error("config-invalid", "kernel must be sampled on the macro time grid");

    Mat2 C0 = Mat2::identity(tensors.sigma0) + tensors.A0;
    Mat2 Ck = C0;
    if (with_kernel) Ck = Ck + tensors.A1[0] * (0.5 * dt);
    for (const Mat2& C : {C0, Ck}) {
        Eig2 e = eig2x2_symmetric(Mat2{C.a11, 0.5 * (C.a12 + C.a21),
                                       0.5 * (C.a12 + C.a21), C.a22});
        if (e.lambda2 <= 0.0)
            throw Error("noncoercive-effective-tensor",
                        "effective coefficient is not positive definite");
    }

    DofMap dofs = DofMap::build(macro_mesh, DofMap::Interface::Jump);
    std::vector<std::pair<int, double>> constraints;
    {
        std::vector<char> seen(dofs.dof_count(), 0);
        for (int v : macro_mesh.boundary_vertices) {
            int d = dofs.dof(v);
            if (!seen[d]) {
                seen[d] = 1;
                constraints.emplace_back(d, boundary(macro_mesh.vertices[v]));
            }
        }
        std::sort(constraints.begin(), constraints.end());
    }

    SparseSystem base0 = assemble_stiffness_tensor(macro_mesh, dofs, C0);
    base0.matrix.finalize();
    SparseSystem basek = assemble_stiffness_tensor(macro_mesh, dofs, Ck);
    basek.matrix.finalize();

    std::size_t n_tri = macro_mesh.triangles.size();
    std::vector<double> tri_area(n_tri);
    std::vector<std::array<Vec2, 3>> tri_grad(n_tri);
    for (std::size_t ti = 0; ti < n_tri; ++ti) {
        const Triangle& t = macro_mesh.triangles[ti];
        const Vec2& p0 = macro_mesh.vertices[t.v[0]];
        const Vec2& p1 = macro_mesh.vertices[t.v[1]];
        const Vec2& p2 = macro_mesh.vertices[t.v[2]];
        double area2 = (p1 - p0).cross(p2 - p0);
        tri_area[ti] = 0.5 * area2;
        tri_grad[ti] = {Vec2{(p1.y - p2.y) / area2, (p2.x - p1.x) / area2},
                        Vec2{(p2.y - p0.y) / area2, (p0.x - p2.x) / area2},
                        Vec2{(p0.y - p1.y) / area2, (p1.x - p0.x) / area2}};
    }

    MacroSolution out;
    out.t_grid = t_grid;
    std::vector<std::vector<Vec2>> grads;  // [time][triangle]
    std::vector<double> u_prev;

    for (std::size_t k = 0; k < t_grid.size(); ++k) {
        std::vector<double> rhs(dofs.dof_count(), 0.0);
        for (std::size_t ti = 0; ti < n_tri; ++ti) {
            Vec2 load{0.0, 0.0};
            if (!tensors.F.empty()) {
                const Triangle& t = macro_mesh.triangles[ti];
                Vec2 centroid = (macro_mesh.vertices[t.v[0]] + macro_mesh.vertices[t.v[1]] +
                                 macro_mesh.vertices[t.v[2]]) * (1.0 / 3.0);
                double mod = source_modulation ? source_modulation(centroid) : 1.0;
                load = tensors.F[std::min(k, tensors.F.size() - 1)] * mod;
            }
            if (with_kernel && k >= 1) {
                // Trapezoid history sum over j = 0..k-1 (j = k is implicit).
                for (std::size_t j = 0; j < k; ++j) {
                    double w = (j == 0) ? 0.5 * dt : dt;
                    const Mat2& A1 = tensors.A1[k - j];
                    const Vec2& g = grads[j][ti];
                    load.x -= w * (A1.a11 * g.x + A1.a12 * g.y);
                    load.y -= w * (A1.a21 * g.x + A1.a22 * g.y);
                }
            }
            if (load.x == 0.0 && load.y == 0.0) continue;
            const Triangle& t = macro_mesh.triangles[ti];
            for (int a = 0; a < 3; ++a)
                rhs[dofs.dof(t.v[a])] += tri_area[ti] * load.dot(tri_grad[ti][a]);
        }

        SparseMatrix work = (k == 0) ? base0.matrix : basek.matrix;
        work.eliminate_dirichlet(constraints, rhs);
        CgOptions cg;
        cg.tol = tol;
        if (!u_prev.empty()) cg.initial_guess = &u_prev;
        std::vector<double> u = cg_solve(work, rhs, cg);
        u_prev = u;

        std::vector<double> vertex_u(macro_mesh.vertices.size());
        for (std::size_t v = 0; v < macro_mesh.vertices.size(); ++v)
            vertex_u[v] = u[dofs.dof(static_cast<int>(v))];
        std::vector<Vec2> g(n_tri);
        for (std::size_t ti = 0; ti < n_tri; ++ti)
            g[ti] = p1_gradient(macro_mesh, macro_mesh.triangles[ti], vertex_u);
        grads.push_back(std::move(g));
        out.fields.push_back(std::move(vertex_u));
    }
    return out;
}

MicroSolution solve_micro(const CellGeometry& geometry, const ModelParams& params,
                          double eps, double domain_size, double h_unit,
                          const InitialJumpSpec& s1,
                          const std::vector<double>& t_grid, double tol) {
    check_uniform_grid(t_grid);
    MicroSolution out;
    out.mesh = build_tiled_mesh(geometry, eps, domain_size, h_unit);
    const InterfaceMesh& mesh = out.mesh;
    out.t_grid = t_grid;

    ModelParams p_eps = params;
    p_eps.delta = eps * params.delta;  // delta = eps * delta0

    DofMap dofs = DofMap::build(mesh, DofMap::Interface::Jump);
    TransmissionStepper::Options opt;
    opt.capacitance_over_delta = p_eps.c_m / p_eps.delta;
    opt.dt = t_grid[1] - t_grid[0];
    opt.solver_tol = tol;
    {
        std::vector<char> seen(dofs.dof_count(), 0);
        for (int v : mesh.boundary_vertices) {
            int d = dofs.dof(v);
            if (!seen[d]) {
                seen[d] = 1;
                opt.dirichlet.emplace_back(d, 0.0);
            }
        }
        std::sort(opt.dirichlet.begin(), opt.dirichlet.end());
    }
    TransmissionStepper stepper(mesh, dofs, p_eps.sigma_i, p_eps.sigma_e, opt);

    std::vector<double> theta = mesh.interface_angles();
    std::vector<double> weights = mesh.interface_weights();
    std::vector<double> v(mesh.pair_count());
    for (int p = 0; p < mesh.pair_count(); ++p) {
        const Vec2& pos = mesh.vertices[mesh.interface_pairs[p].first];
        double mod = s1.modulation ? s1.modulation(pos) : 1.0;
        v[p] = eps * s1.amplitude * mod * std::cos(theta[p]);
    }
    std::vector<double> N(mesh.pair_count(), p_eps.N0);

    auto bulk_energy = [&](const std::vector<double>& field) {
        double acc = 0.0;
        for (const auto& t : mesh.triangles) {
            Vec2 g = p1_gradient(mesh, t, field);
            double sigma = (t.tag == Subdomain::Inner) ? p_eps.sigma_i : p_eps.sigma_e;
            acc += mesh.triangle_area(t) * sigma * g.dot(g);
        }
        return acc;
    };
    auto jump_l2 = [&](const std::vector<double>& jump) {
        double acc = 0.0;
        for (int p = 0; p < mesh.pair_count(); ++p)
            acc += weights[p] * jump[p] * jump[p];
        return acc;
    };

    stepper.solve_prescribed_jump(v);
    std::vector<double> field = to_vertex_field(mesh, dofs, stepper.field());
    double bulk_prev = bulk_energy(field);
    double bulk_cum = 0.0;
    out.fields.push_back(field);
    out.interface_l2.push_back(jump_l2(v));
    out.energy_lhs.push_back(bulk_cum + out.interface_l2.back() / eps);

    double dt = t_grid[1] - t_grid[0];
    std::vector<double> relax(mesh.pair_count());
    for (std::size_t k = 1; k < t_grid.size(); ++k) {
        for (int p = 0; p < mesh.pair_count(); ++p) {
            double av = std::abs(v[p]);
            double gamma = av > p_eps.M ? p_eps.M / av : 1.0;
            double sm = membrane_conductivity(MembraneModel::NeuKrassowska,
                                              clamp_voltage(v[p], p_eps.M), N[p], p_eps);
            relax[p] = gamma * sm / p_eps.delta;
        }
        v = stepper.advance(v, relax);
        for (int p = 0; p < mesh.pair_count(); ++p)
            N[p] = advance_pore_density(MembraneModel::NeuKrassowska,
                                        clamp_voltage(v[p], p_eps.M), N[p], dt, p_eps);
        field = to_vertex_field(mesh, dofs, stepper.field());
        double bulk_now = bulk_energy(field);
        bulk_cum += 0.5 * dt * (bulk_prev + bulk_now);
        bulk_prev = bulk_now;
        out.fields.push_back(field);
        out.interface_l2.push_back(jump_l2(v));
        out.energy_lhs.push_back(bulk_cum + out.interface_l2.back() / eps);
    }
    return out;
}

std::vector<ConvergenceRow> convergence_study(const CellGeometry& geometry,
                                              const ModelParams& params,
                                              const std::vector<double>& eps_list,
                                              const ConvergenceOptions& options) {
    if (eps_list.empty())
        throw Error("config-invalid", "empty eps list");
    for (std::size_t i = 1; i < eps_list.size(); ++i)
        if (!(eps_list[i] < eps_list[i - 1]))
            throw Error("config-invalid", "eps list must be strictly decreasing");

    double L = geometry.unit_cell_size;
    double h_unit = options.h_unit > 0.0 ? options.h_unit : L / 12.0;
    std::vector<double> t_grid = kernel_time_grid(geometry, params, options.t_samples);

    InterfaceMesh unit = build_unit_cell_mesh(geometry, h_unit);
    CorrectorSolution correctors =
        solve_cell_correctors(unit, params.sigma_i, params.sigma_e, options.solver_tol);
    MemoryCorrector memory =
        compute_memory_corrector(unit, params, correctors, t_grid, options.solver_tol);

    std::vector<double> theta = unit.interface_angles();
    std::vector<double> s1_hat(unit.pair_count());
    for (int p = 0; p < unit.pair_count(); ++p)
        s1_hat[p] = options.s1_amplitude * std::cos(theta[p]);
    TransformResult transformed_s1 =
        relaxation_transform(unit, params, s1_hat, t_grid, options.solver_tol);
    EffectiveTensors tensors =
        effective_tensors(unit, correctors, memory, params, &transformed_s1);

    auto modulation = [L](Vec2 x) {
        return std::sin(M_PI * x.x / L) * std::sin(M_PI * x.y / L);
    };

    InterfaceMesh macro_mesh = build_square_mesh(L, L / 64.0);
    MacroSolution macro = solve_macro(macro_mesh, tensors, modulation, AffineField{},
                                      t_grid, options.solver_tol);
    FieldSampler macro_sampler(macro_mesh);

    // Fixed interior sample lattice and time window.
    std::vector<Vec2> points;
    for (int i = 0; i < options.sample_points; ++i) {
        for (int j = 0; j < options.sample_points; ++j) {
            double fx = options.window_lo +
                        (options.window_hi - options.window_lo) * i /
                            (options.sample_points - 1);
            double fy = options.window_lo +
                        (options.window_hi - options.window_lo) * j /
                            (options.sample_points - 1);
            points.push_back({fx * L, fy * L});
        }
    }
    std::size_t k0 = static_cast<std::size_t>(options.time_lo * (t_grid.size() - 1));

    std::vector<double> macro_at_points;  // [time * points]
    std::vector<int> macro_tris(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
        macro_tris[i] = macro_sampler.locate(points[i]);
    for (std::size_t k = k0; k < t_grid.size(); ++k)
        for (std::size_t i = 0; i < points.size(); ++i)
            macro_at_points.push_back(
                macro_sampler.evaluate_in(macro_tris[i], macro.fields[k], points[i]));

    InitialJumpSpec s1;
    s1.amplitude = options.s1_amplitude;
    s1.modulation = modulation;

    std::vector<ConvergenceRow> rows;
    for (double eps : eps_list) {
        MicroSolution micro = solve_micro(geometry, params, eps, L, h_unit, s1, t_grid,
                                          options.solver_tol);
        FieldSampler sampler(micro.mesh);
        std::vector<int> tris(points.size());
        for (std::size_t i = 0; i < points.size(); ++i)
            tris[i] = sampler.locate(points[i]);
        double err = 0.0;
        std::size_t count = 0, idx = 0;
        for (std::size_t k = k0; k < t_grid.size(); ++k) {
            for (std::size_t i = 0; i < points.size(); ++i, ++idx) {
                double ue = sampler.evaluate_in(tris[i], micro.fields[k], points[i]);
                err += std::abs(ue - macro_at_points[idx]);
                ++count;
            }
        }
        ConvergenceRow row;
        row.eps = eps;
        row.l1_error = err / count;
        for (std::size_t k = 0; k < micro.energy_lhs.size(); ++k) {
            row.energy_lhs = std::max(row.energy_lhs, micro.energy_lhs[k]);
            row.interface_l2_over_eps =
                std::max(row.interface_l2_over_eps, micro.interface_l2[k] / eps);
        }
        rows.push_back(row);
    }
    return rows;
}

namespace {

void append_number(std::string& s, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    s += buf;
}

} // namespace

std::string tensors_to_csv(const EffectiveTensors& tensors) {
    std::string s = "sigma0,A0_11,A0_12,A0_21,A0_22,lam1_A0,lam2_A0\n";
    Eig2 e = eig2x2_symmetric(Mat2{tensors.A0.a11,
                                   0.5 * (tensors.A0.a12 + tensors.A0.a21),
                                   0.5 * (tensors.A0.a12 + tensors.A0.a21),
                                   tensors.A0.a22});
    double values[] = {tensors.sigma0, tensors.A0.a11, tensors.A0.a12, tensors.A0.a21,
                       tensors.A0.a22, e.lambda1, e.lambda2};
    for (int i = 0; i < 7; ++i) {
        append_number(s, values[i]);
        s += (i == 6) ? '\n' : ',';
    }
    return s;
}

std::string kernel_to_csv(const EffectiveTensors& tensors) {
    std::string s = "t,A1_11,A1_12,A1_21,A1_22\n";
    for (std::size_t k = 0; k < tensors.A1.size(); ++k) {
        append_number(s, tensors.t_grid[k]);
        s += ',';
        append_number(s, tensors.A1[k].a11);
        s += ',';
        append_number(s, tensors.A1[k].a12);
        s += ',';
        append_number(s, tensors.A1[k].a21);
        s += ',';
        append_number(s, tensors.A1[k].a22);
        s += '\n';
    }
    return s;
}

} // namespace epihom

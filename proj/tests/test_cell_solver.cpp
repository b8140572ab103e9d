#include <doctest.h>

#include <cmath>
#include <random>

#include "epihom/cell_solver.hpp"
#include "epihom/mesh.hpp"

using namespace epihom;

namespace {

CellGeometry table_circle() {
    CellGeometry g;
    g.unit_cell_size = 2e-4;
    g.radius = 0.5e-4;
    return g;
}

// Physically scaled parameter set: nm pore radius and a realistic resting
// membrane conductance (sigma_m0/delta around 4 S/m^2).
ModelParams physical_params() {
    ModelParams p = ModelParams::defaults();
    p.sigma_m0 = 1.9e-8;
    p.r_p = 0.76e-9;
    p.beta = pore_conductance_coefficient(p);
    return p;
}

double weighted_l2(const std::vector<double>& v, const std::vector<double>& w) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += w[i] * v[i] * v[i];
    return std::sqrt(s);
}

// Cyclic Jacobi eigensolver for small symmetric matrices (test oracle only).
void jacobi_eigen(DenseMatrix a, std::vector<double>& eigenvalues,
                  DenseMatrix& eigenvectors) {
    int n = a.rows();
    eigenvectors = DenseMatrix(n, n);
    for (int i = 0; i < n; ++i) eigenvectors.at(i, i) = 1.0;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += a.at(i, j) * a.at(i, j);
        if (off < 1e-28 * n * n) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double apq = a.at(p, q);
                if (std::abs(apq) < 1e-300) continue;
                double theta = 0.5 * (a.at(q, q) - a.at(p, p)) / apq;
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (int k = 0; k < n; ++k) {
                    double akp = a.at(k, p), akq = a.at(k, q);
                    a.at(k, p) = c * akp - s * akq;
                    a.at(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    double apk = a.at(p, k), aqk = a.at(q, k);
                    a.at(p, k) = c * apk - s * aqk;
                    a.at(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    double vkp = eigenvectors.at(k, p), vkq = eigenvectors.at(k, q);
                    eigenvectors.at(k, p) = c * vkp - s * vkq;
                    eigenvectors.at(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    eigenvalues.resize(n);
    for (int i = 0; i < n; ++i) eigenvalues[i] = a.at(i, i);
}

} // namespace

TEST_CASE("zero boundary data keeps the rest state bit-exactly") {
    CellGeometry g = table_circle();
    InterfaceMesh mesh = build_unit_cell_mesh(g, g.unit_cell_size / 12.0);
    TransmissionProblem prob;
    prob.mesh = &mesh;
    prob.params = physical_params();
    prob.boundary_data = {};
    prob.dt = 5e-9;
    prob.T = 1e-7;
    TmpTrace trace = run(prob);
    for (double v : trace.v_pole) CHECK(v == 0.0);
    for (double e : trace.energy) CHECK(e == 0.0);
    for (double n : trace.N_profile) CHECK(n == prob.params.N0);
    CHECK_FALSE(trace.cutoff_activated);
}

TEST_CASE("single step matches the first step of a run") {
    CellGeometry g = table_circle();
    InterfaceMesh mesh = build_unit_cell_mesh(g, g.unit_cell_size / 12.0);
    TransmissionProblem prob;
    prob.mesh = &mesh;
    prob.params = physical_params();
    prob.boundary_data = {0.0, 4e4, 0.0};
    prob.dt = 2e-9;
    prob.T = 2e-9;
    prob.record_snapshots = true;
    MembraneState s0 = rest_state(mesh, prob.params);
    MembraneState s1 = step(prob, s0);
    TmpTrace trace = run(prob);
    REQUIRE(trace.v_snapshots.size() == 2);
    for (std::size_t i = 0; i < s1.v.size(); ++i)
        CHECK(s1.v[i] == doctest::Approx(trace.v_snapshots[1][i]).epsilon(1e-12));
}

TEST_CASE("steklov operator balances flux for a constant jump") {
    CellGeometry g = table_circle();
    InterfaceMesh mesh = build_unit_cell_mesh(g, g.unit_cell_size / 12.0);
    SteklovReduction red = discrete_steklov(mesh, 3.0, 3.0, AffineField{});
    int m = red.op.rows();
    std::vector<double> ones(m, 1.0);
    std::vector<double> flux = red.op.multiply(ones);
    double total = 0.0, scale = 0.0;
    for (int q = 0; q < m; ++q) {
        total += flux[q];
        for (int p = 0; p < m; ++p) scale = std::max(scale, std::abs(red.op.at(q, p)));
    }
    CHECK(std::abs(total) <= 1e-10 * scale * m);
}

TEST_CASE("steklov operator is accretive on random jumps") {
    CellGeometry g = table_circle();
    InterfaceMesh mesh = build_unit_cell_mesh(g, g.unit_cell_size / 12.0);
    SteklovReduction red = discrete_steklov(mesh, 0.455, 5.0, AffineField{});
    int m = red.op.rows();
    std::mt19937 rng(7u);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> w(m);
        for (double& x : w) x = dist(rng);
        double quad = dot(w, red.op.multiply(w));
        CHECK(quad >= -1e-10 * dot(w, w));
    }
}

TEST_CASE("reduced interface ODE reproduces the full trajectory") {
    CellGeometry g = table_circle();
    InterfaceMesh mesh = build_unit_cell_mesh(g, g.unit_cell_size / 12.0);
    ModelParams params = physical_params();
    AffineField field{0.0, 4e4, 0.0};
    double dt = 4e-9, T = 8e-7;

    TransmissionProblem prob;
    prob.mesh = &mesh;
    prob.params = params;
    prob.boundary_data = field;
    prob.dt = dt;
    prob.T = T;
    prob.solver_tol = 1e-14;
    prob.record_snapshots = true;
    TmpTrace full = run(prob);

    SteklovReduction red = discrete_steklov(mesh, params.sigma_i, params.sigma_e, field);
    TmpTrace reduced = run_reduced(red, params, MembraneModel::NeuKrassowska, dt, T,
                                   nullptr, true);

    REQUIRE(full.v_snapshots.size() == reduced.v_snapshots.size());
    std::vector<double> w = mesh.interface_weights();
    double worst = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < full.v_snapshots.size(); ++k) {
        std::vector<double> diff(w.size());
        for (std::size_t i = 0; i < w.size(); ++i)
            diff[i] = full.v_snapshots[k][i] - reduced.v_snapshots[k][i];
        worst = std::max(worst, weighted_l2(diff, w));
        scale = std::max(scale, weighted_l2(full.v_snapshots[k], w));
    }
    CHECK(worst <= 1e-8 * scale);
}

TEST_CASE("reduced ODE with zero source stays at rest") {
    CellGeometry g = table_circle();
    InterfaceMesh mesh = build_unit_cell_mesh(g, g.unit_cell_size / 12.0);
    ModelParams params = physical_params();
    SteklovReduction red = discrete_steklov(mesh, params.sigma_i, params.sigma_e,
                                            AffineField{});
    for (double& v : red.load) v = 0.0;
    TmpTrace trace = run_reduced(red, params, MembraneModel::NeuKrassowska, 1e-8, 1e-6);
    for (double v : trace.v_pole) CHECK(v == 0.0);
}

TEST_CASE("linear membrane relaxes along the dense eigendecomposition") {
    CellGeometry g = table_circle();
    InterfaceMesh mesh = build_unit_cell_mesh(g, g.unit_cell_size / 12.0);
    ModelParams params = physical_params();
    params.K = 0.0;  // static law, constant sigma_m0
    AffineField field{0.0, 4e4, 0.0};
    SteklovReduction red = discrete_steklov(mesh, params.sigma_i, params.sigma_e, field);
    int m = red.op.rows();

    // Symmetrized generator: A = (delta/c_m) W^{-1/2} (W sm0/delta + S) W^{-1/2}.
    DenseMatrix sym(m, m);
    std::vector<double> sqw(m);
    for (int i = 0; i < m; ++i) sqw[i] = std::sqrt(red.weights[i]);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            double a = 0.5 * (red.op.at(i, j) + red.op.at(j, i));
            sym.at(i, j) = (params.delta / params.c_m) * a / (sqw[i] * sqw[j]);
        }
    for (int i = 0; i < m; ++i)
        sym.at(i, i) += params.sigma_m0 / params.c_m;

    std::vector<double> lambda;
    DenseMatrix Q;
    jacobi_eigen(sym, lambda, Q);

    // Exact solution v(t) = W^{-1/2} Q (I - e^{-Lambda t}) Q^T W^{-1/2} (delta/c_m) G.
    std::vector<double> gs(m);
    for (int i = 0; i < m; ++i) gs[i] = (params.delta / params.c_m) * red.load[i] / sqw[i];
    std::vector<double> gm(m, 0.0);
    for (int k = 0; k < m; ++k)
        for (int i = 0; i < m; ++i) gm[k] += Q.at(i, k) * gs[i];

    auto exact_at = [&](double t) {
        std::vector<double> y(m, 0.0);
        for (int k = 0; k < m; ++k) {
            double mode = gm[k] * (1.0 - std::exp(-lambda[k] * t)) / lambda[k];
            for (int i = 0; i < m; ++i) y[i] += Q.at(i, k) * mode;
        }
        for (int i = 0; i < m; ++i) y[i] /= sqw[i];
        return y;
    };

    double dt = 1e-9, T = 4e-7;
    TmpTrace trace = run_reduced(red, params, MembraneModel::Static, dt, T, nullptr, true);
    std::vector<double> v_inf = exact_at(1e3 * T);
    double vscale = weighted_l2(v_inf, red.weights);
    for (std::size_t k = 10; k < trace.times.size(); k += 40) {
        std::vector<double> ex = exact_at(trace.times[k]);
        std::vector<double> diff(m);
        for (int i = 0; i < m; ++i) diff[i] = ex[i] - trace.v_snapshots[k][i];
        CHECK(weighted_l2(diff, red.weights) <= 2e-2 * vscale);
    }
}

TEST_CASE("pole voltage follows the RC charging curve for a linear membrane") {
    CellGeometry g = table_circle();
    InterfaceMesh mesh = build_unit_cell_mesh(g, g.unit_cell_size / 12.0);
    ModelParams params = physical_params();
    AffineField field{0.0, 4e4, 0.0};
    SteklovReduction red = discrete_steklov(mesh, params.sigma_i, params.sigma_e, field);
    int m = red.op.rows();

    // Steady profile from the dense stationary system.
    DenseMatrix A = red.op;
    for (int i = 0; i < m; ++i)
        A.at(i, i) += red.weights[i] * params.sigma_m0 / params.delta;
    std::vector<double> v_inf = dense_solve(A, red.load);

    // Time constant from the Rayleigh quotient of the Schur operator at the
    // steady profile: tau = c_m / (sigma_m0 + delta * Lambda).
    std::vector<double> Sv = red.op.multiply(v_inf);
    double num = dot(v_inf, Sv);
    double den = 0.0;
    for (int i = 0; i < m; ++i) den += red.weights[i] * v_inf[i] * v_inf[i];
    double lambda_coef = num / den;
    double tau = params.c_m / (params.sigma_m0 + params.delta * lambda_coef);

    double dt = tau / 400.0, T = 6.0 * tau;
    TmpTrace trace = run_reduced(red, params, MembraneModel::Static, dt, T);
    double v_pole_inf = v_inf[red.pole];
    double worst = 0.0;
    for (std::size_t k = 0; k < trace.times.size(); ++k) {
        double rc = v_pole_inf * (1.0 - std::exp(-trace.times[k] / tau));
        worst = std::max(worst, std::abs(trace.v_pole[k] - rc));
    }
    CHECK(worst <= 0.02 * std::abs(v_pole_inf));
}

TEST_CASE("halving dt shows first-order convergence of the pole voltage") {
    CellGeometry g = table_circle();
    InterfaceMesh mesh = build_unit_cell_mesh(g, g.unit_cell_size / 12.0);
    ModelParams params = physical_params();
    AffineField field{0.0, 4e4, 0.0};
    SteklovReduction red = discrete_steklov(mesh, params.sigma_i, params.sigma_e, field);
    double T = 4e-7;
    auto final_pole = [&](double dt) {
        TmpTrace t = run_reduced(red, params, MembraneModel::NeuKrassowska, dt, T);
        return t.v_pole.back();
    };
    double p1 = final_pole(4e-9), p2 = final_pole(2e-9), p3 = final_pole(1e-9);
    double order = std::log2(std::abs(p1 - p2) / std::abs(p2 - p3));
    CHECK(order > 0.8);
    CHECK(order < 1.2);
}

TEST_CASE("cutoff level does not alter trajectories that stay below it") {
    CellGeometry g = table_circle();
    InterfaceMesh mesh = build_unit_cell_mesh(g, g.unit_cell_size / 12.0);
    ModelParams params = physical_params();
    AffineField field{0.0, 4e4, 0.0};
    SteklovReduction red = discrete_steklov(mesh, params.sigma_i, params.sigma_e, field);

    ModelParams loose = params;
    loose.M = 1e9;
    TmpTrace a = run_reduced(red, params, MembraneModel::NeuKrassowska, 4e-9, 4e-7);
    TmpTrace b = run_reduced(red, loose, MembraneModel::NeuKrassowska, 4e-9, 4e-7);
    REQUIRE(!a.cutoff_activated);
    for (std::size_t k = 0; k < a.v_pole.size(); ++k) CHECK(a.v_pole[k] == b.v_pole[k]);
    for (std::size_t i = 0; i < a.N_profile.size(); ++i) {
        CHECK(a.N_profile[i] == b.N_profile[i]);
        CHECK(a.N_profile[i] > 0.0);
    }
}

TEST_CASE("relaxation membrane law runs and keeps its density in range") {
    CellGeometry g = table_circle();
    InterfaceMesh mesh = build_unit_cell_mesh(g, g.unit_cell_size / 12.0);
    ModelParams params = physical_params();
    params.beta = 1.9e-8;  // relaxation-law density is a fraction in [0, 1]
    AffineField field{0.0, 1.5e4, 0.0};
    SteklovReduction red = discrete_steklov(mesh, params.sigma_i, params.sigma_e, field);
    TmpTrace trace = run_reduced(red, params, MembraneModel::Relaxation, 4e-9, 4e-7);
    CHECK(std::isfinite(trace.v_pole.back()));
    CHECK(trace.v_pole.back() > 0.0);
    CHECK(trace.v_pole.back() < params.M);
    for (double n : trace.N_profile) {
        CHECK(n >= 0.0);
        CHECK(n <= 1.0);
    }
    // Fast-branch relaxation toward the tanh target: over T = 0.4 tau_ep the
    // density reaches roughly 1 - e^{-T/tau_ep} of a near-unit target.
    double n_pole = trace.N_profile[red.pole];
    if (trace.v_pole.back() > params.V_ep) {
        double progress = 1.0 - std::exp(-4e-7 / params.tau_ep);
        CHECK(n_pole > 0.6 * progress);
        CHECK(n_pole < 1.4 * progress);
    }
}

TEST_CASE("energy monitor accepts stable runs and flags corrupted parameters") {
    CellGeometry g = table_circle();
    InterfaceMesh mesh = build_unit_cell_mesh(g, g.unit_cell_size / 12.0);
    ModelParams params = physical_params();
    AffineField field{0.0, 4e4, 0.0};
    SteklovReduction red = discrete_steklov(mesh, params.sigma_i, params.sigma_e, field);
    TmpTrace trace = run_reduced(red, params, MembraneModel::NeuKrassowska, 4e-9, 4e-7);

    MonitorReport ok = energy_monitor(trace, params, red.source_norm());
    CHECK_FALSE(ok.violated);
    CHECK(ok.max_norm <= ok.bound);

    ModelParams corrupted = params;
    corrupted.sigma_m0 = -params.sigma_m0;
    MonitorReport bad = energy_monitor(trace, corrupted, red.source_norm());
    CHECK(bad.violated);
    CHECK(bad.first_violation >= 0);

    TmpTrace zero;
    zero.times = {0.0};
    zero.v_l2 = {0.0};
    MonitorReport trivial = energy_monitor(zero, params, 0.0);
    CHECK_FALSE(trivial.violated);
}

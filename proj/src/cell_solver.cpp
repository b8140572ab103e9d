#include "epihom/cell_solver.hpp"

#include <algorithm>
#include <cmath>

namespace epihom {

namespace {

std::vector<std::pair<int, double>> dirichlet_constraints(const InterfaceMesh& mesh,
                                                          const DofMap& dofs,
                                                          const AffineField& g) {
    std::vector<std::pair<int, double>> out;
    std::vector<char> seen(dofs.dof_count(), 0);
    for (int v : mesh.boundary_vertices) {
        int d = dofs.dof(v);
        if (!seen[d]) {
            seen[d] = 1;
            out.emplace_back(d, g(mesh.vertices[v]));
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

int pole_pair(const InterfaceMesh& mesh) {
    int best = 0;
    double bx = mesh.vertices[mesh.interface_pairs[0].first].x;
    for (int p = 1; p < mesh.pair_count(); ++p) {
        double x = mesh.vertices[mesh.interface_pairs[p].first].x;
        if (x > bx) {
            bx = x;
            best = p;
        }
    }
    return best;
}

struct StepScratch {
    std::vector<double> coef;
    bool cutoff = false;
};

void relax_coefficients(const MembraneState& s, const ModelParams& p,
                        MembraneModel model, StepScratch& scratch) {
    std::size_t n = s.v.size();
    scratch.coef.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double av = std::abs(s.v[i]);
        double gamma = 1.0;
        if (av > p.M) {
            gamma = p.M / av;
            scratch.cutoff = true;
        }
        double vm = clamp_voltage(s.v[i], p.M);
        double sm = membrane_conductivity(model, vm, s.N[i], p);
        scratch.coef[i] = gamma * sm / p.delta;
    }
}

void update_pore_density(MembraneState& s, const ModelParams& p, MembraneModel model,
                         double dt) {
    if (model == MembraneModel::Static) return;
    for (std::size_t i = 0; i < s.v.size(); ++i)
        s.N[i] = advance_pore_density(model, clamp_voltage(s.v[i], p.M), s.N[i], dt, p);
}

void record(TmpTrace& trace, const MembraneState& s, const std::vector<double>& w,
            const ModelParams& p, int pole) {
    double vv = 0.0;
    for (std::size_t i = 0; i < s.v.size(); ++i) vv += w[i] * s.v[i] * s.v[i];
    trace.times.push_back(s.t);
    trace.v_pole.push_back(s.v[pole]);
    trace.v_l2.push_back(std::sqrt(vv));
    trace.energy.push_back(0.5 * (p.c_m / p.delta) * vv);
}

} // namespace

void TransmissionProblem::validate() const {
    if (!mesh) throw Error("config-invalid", "transmission problem without mesh");
    if (!(dt > 0.0)) throw Error("config-invalid", "dt must be positive");
    if (!(T >= dt)) throw Error("config-invalid", "final time shorter than one step");
    params.validate();
}

MembraneState rest_state(const InterfaceMesh& mesh, const ModelParams& params,
                         MembraneModel model) {
    MembraneState s;
    s.v.assign(mesh.pair_count(), 0.0);
    double n0 = params.N0;
    if (model == MembraneModel::Relaxation)
        n0 = 0.5 * (1.0 + std::tanh(-params.k_ep * params.V_ep));
    s.N.assign(mesh.pair_count(), n0);
    s.t = 0.0;
    return s;
}

MembraneState step(const TransmissionProblem& problem, const MembraneState& state) {
    problem.validate();
    const InterfaceMesh& mesh = *problem.mesh;
    DofMap dofs = DofMap::build(mesh, DofMap::Interface::Jump);
    TransmissionStepper::Options opt;
    opt.capacitance_over_delta = problem.params.c_m / problem.params.delta;
    opt.dt = problem.dt;
    opt.solver_tol = problem.solver_tol;
    opt.dirichlet = dirichlet_constraints(mesh, dofs, problem.boundary_data);
    TransmissionStepper stepper(mesh, dofs, problem.params.sigma_i,
                                problem.params.sigma_e, opt);

    StepScratch scratch;
    relax_coefficients(state, problem.params, problem.model, scratch);
    MembraneState next;
    next.v = stepper.advance(state.v, scratch.coef);
    next.N = state.N;
    next.t = state.t + problem.dt;
    update_pore_density(next, problem.params, problem.model, problem.dt);
    return next;
}

TmpTrace run(const TransmissionProblem& problem, const MembraneState* initial) {
    problem.validate();
    const InterfaceMesh& mesh = *problem.mesh;
    DofMap dofs = DofMap::build(mesh, DofMap::Interface::Jump);
    TransmissionStepper::Options opt;
    opt.capacitance_over_delta = problem.params.c_m / problem.params.delta;
    opt.dt = problem.dt;
    opt.solver_tol = problem.solver_tol;
    opt.dirichlet = dirichlet_constraints(mesh, dofs, problem.boundary_data);
    TransmissionStepper stepper(mesh, dofs, problem.params.sigma_i,
                                problem.params.sigma_e, opt);

    MembraneState state =
        initial ? *initial : rest_state(mesh, problem.params, problem.model);
    std::vector<double> w = mesh.interface_weights();
    int pole = pole_pair(mesh);

    TmpTrace trace;
    record(trace, state, w, problem.params, pole);
    if (problem.record_snapshots) trace.v_snapshots.push_back(state.v);
    int n_steps = std::max(1, static_cast<int>(std::lround(problem.T / problem.dt)));
    double t0 = state.t;
    StepScratch scratch;
    for (int k = 1; k <= n_steps; ++k) {
        relax_coefficients(state, problem.params, problem.model, scratch);
        state.v = stepper.advance(state.v, scratch.coef);
        state.t = t0 + k * problem.dt;
        update_pore_density(state, problem.params, problem.model, problem.dt);
        record(trace, state, w, problem.params, pole);
        if (problem.record_snapshots) trace.v_snapshots.push_back(state.v);
    }
    trace.cutoff_activated = scratch.cutoff;
    trace.theta = mesh.interface_angles();
    trace.v_profile = state.v;
    trace.N_profile = state.N;
    return trace;
}

double SteklovReduction::source_norm() const {
    double s = 0.0;
    for (std::size_t i = 0; i < load.size(); ++i) s += load[i] * load[i] / weights[i];
    return std::sqrt(s);
}

SteklovReduction discrete_steklov(const InterfaceMesh& mesh, double sigma_inner,
                                  double sigma_outer, const AffineField& boundary,
                                  double solver_tol) {
    DofMap dofs = DofMap::build(mesh, DofMap::Interface::Jump);
    int m = mesh.pair_count();

    TransmissionStepper::Options opt0;
    opt0.solver_tol = solver_tol;
    opt0.dt = 1.0;  // unused by prescribed-jump solves
    opt0.dirichlet = dirichlet_constraints(mesh, dofs, AffineField{});
    TransmissionStepper columns(mesh, dofs, sigma_inner, sigma_outer, opt0);

    SteklovReduction red;
    red.op = DenseMatrix(m, m);
    std::vector<double> e(m, 0.0);
    try {
        for (int p = 0; p < m; ++p) {
            e[p] = 1.0;
            columns.solve_prescribed_jump(e);
            e[p] = 0.0;
            std::vector<double> flux = columns.interface_flux_residual();
            for (int q = 0; q < m; ++q) red.op.at(q, p) = flux[q];
        }
    } catch (const Error& err) {
        throw Error("schur-failure", err.what());
    }

    TransmissionStepper::Options optg;
    optg.solver_tol = solver_tol;
    optg.dt = 1.0;
    optg.dirichlet = dirichlet_constraints(mesh, dofs, boundary);
    TransmissionStepper source(mesh, dofs, sigma_inner, sigma_outer, optg);
    source.solve_prescribed_jump(std::vector<double>(m, 0.0));
    red.load = source.interface_flux_residual();
    for (double& v : red.load) v = -v;

    red.weights = mesh.interface_weights();
    red.angles = mesh.interface_angles();
    red.pole = pole_pair(mesh);
    return red;
}

TmpTrace run_reduced(const SteklovReduction& reduction, const ModelParams& params,
                     MembraneModel model, double dt, double T,
                     const MembraneState* initial, bool record_snapshots) {
    params.validate();
    if (!(dt > 0.0) || !(T >= dt))
        throw Error("config-invalid", "invalid time grid for the reduced run");
    int m = reduction.op.rows();

    MembraneState state;
    if (initial) {
        state = *initial;
    } else {
        state.v.assign(m, 0.0);
        double n0 = params.N0;
        if (model == MembraneModel::Relaxation)
            n0 = 0.5 * (1.0 + std::tanh(-params.k_ep * params.V_ep));
        state.N.assign(m, n0);
        state.t = 0.0;
    }

    TmpTrace trace;
    record(trace, state, reduction.weights, params, reduction.pole);
    if (record_snapshots) trace.v_snapshots.push_back(state.v);
    int n_steps = std::max(1, static_cast<int>(std::lround(T / dt)));
    double cap_rate = params.c_m / params.delta / dt;
    double t0 = state.t;
    StepScratch scratch;
    for (int k = 1; k <= n_steps; ++k) {
        relax_coefficients(state, params, model, scratch);
        DenseMatrix A = reduction.op;
        std::vector<double> rhs(m);
        for (int i = 0; i < m; ++i) {
            A.at(i, i) += reduction.weights[i] * (cap_rate + scratch.coef[i]);
            rhs[i] = reduction.weights[i] * cap_rate * state.v[i] + reduction.load[i];
        }
        auto perm = A.lu_factor();
        state.v = A.lu_solve(perm, rhs);
        state.t = t0 + k * dt;
        update_pore_density(state, params, model, dt);
        record(trace, state, reduction.weights, params, reduction.pole);
        if (record_snapshots) trace.v_snapshots.push_back(state.v);
    }
    trace.cutoff_activated = scratch.cutoff;
    trace.theta = reduction.angles;
    trace.v_profile = state.v;
    trace.N_profile = state.N;
    return trace;
}

MonitorReport energy_monitor(const TmpTrace& trace, const ModelParams& params,
                             double source_norm) {
    if (trace.times.empty())
        throw Error("config-invalid", "energy monitor needs a non-empty trace");
    MonitorReport report;
    report.bound = 1.1 * source_norm * params.delta / params.sigma_m0;
    for (std::size_t i = 0; i < trace.v_l2.size(); ++i) {
        report.max_norm = std::max(report.max_norm, trace.v_l2[i]);
        if (!report.violated && trace.v_l2[i] > report.bound) {
            report.violated = true;
            report.first_violation = static_cast<int>(i);
        }
    }
    return report;
}

} // namespace epihom

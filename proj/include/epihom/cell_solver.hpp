#pragma once

#include <vector>

#include "epihom/membrane.hpp"
#include "epihom/mesh.hpp"
#include "epihom/transmission.hpp"

namespace epihom {

/// Single-cell (or tiled) nonlinear transmission problem: bulk Laplace
/// equation coupled through the membrane capacitance/conductivity law, driven
/// by an affine Dirichlet trace on the outer boundary.
struct TransmissionProblem {
    const InterfaceMesh* mesh = nullptr;
    ModelParams params;
    MembraneModel model = MembraneModel::NeuKrassowska;
    AffineField boundary_data;
    double dt = 2e-9;   // s
    double T = 2e-6;    // s
    double solver_tol = 1e-12;
    bool record_snapshots = false;  // keep the full jump vector per step

    void validate() const;
};

/// Recorded trajectory: pole voltage and membrane energy per step, full
/// membrane profiles at the final time.
struct TmpTrace {
    std::vector<double> times;
    std::vector<double> v_pole;    // V
    std::vector<double> v_l2;      // ||v||_{L2(Gamma)}, V m^{1/2}
    std::vector<double> energy;    // (c_m / 2 delta) ||v||^2
    std::vector<double> theta;     // final profile arc angles
    std::vector<double> v_profile; // V
    std::vector<double> N_profile; // 1/m^2
    std::vector<std::vector<double>> v_snapshots;  // optional, per recorded step
    bool cutoff_activated = false;
};

/// Rest state: v = 0 everywhere, N at the model's zero-voltage equilibrium.
MembraneState rest_state(const InterfaceMesh& mesh, const ModelParams& params,
                         MembraneModel model = MembraneModel::NeuKrassowska);

/// One semi-implicit step: membrane conductivity frozen at the current state,
/// bulk solve and jump relaxation implicit, then one RK4 pore update with the
/// new voltage.
MembraneState step(const TransmissionProblem& problem, const MembraneState& state);

/// Integrates from the rest state (or a caller-provided initial state).
TmpTrace run(const TransmissionProblem& problem,
             const MembraneState* initial = nullptr);

/// Dense realization of the interface operator (membrane-flux response to a
/// prescribed jump, bulk unknowns eliminated) plus the source induced by the
/// boundary data. Rows and columns are weighted by the lumped membrane
/// measures, i.e. op * v is the tested flux.
struct SteklovReduction {
    DenseMatrix op;              // pair_count x pair_count
    std::vector<double> load;    // tested source, same weighting as op
    std::vector<double> weights; // lumped membrane measures
    std::vector<double> angles;  // arc angles per pair
    int pole = 0;                // pair index of maximal x coordinate

    /// L2(Gamma) norm of the unweighted source term.
    double source_norm() const;
};

SteklovReduction discrete_steklov(const InterfaceMesh& mesh, double sigma_inner,
                                  double sigma_outer, const AffineField& boundary,
                                  double solver_tol = 1e-13);

/// Integrates the dense interface ODE with the same semi-implicit scheme as
/// step(); algebraically equivalent to the full trajectory on one
/// discretization.
TmpTrace run_reduced(const SteklovReduction& reduction, const ModelParams& params,
                     MembraneModel model, double dt, double T,
                     const MembraneState* initial = nullptr,
                     bool record_snapshots = false);

struct MonitorReport {
    bool violated = false;
    int first_violation = -1;
    double bound = 0.0;     // steady-state bound plus 10% margin
    double max_norm = 0.0;  // largest ||v||_{L2(Gamma)} seen
};

/// Checks the discrete trajectory against the steady-state bound
/// ||v|| <= ||G|| * delta / sigma_m0 (plus a 10% transient margin).
MonitorReport energy_monitor(const TmpTrace& trace, const ModelParams& params,
                             double source_norm);

} // namespace epihom

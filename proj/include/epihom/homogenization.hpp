#pragma once

#include <array>
#include <functional>
#include <vector>

#include "epihom/cell_solver.hpp"
#include "epihom/linalg.hpp"
#include "epihom/membrane.hpp"
#include "epihom/mesh.hpp"

namespace epihom {

/// Static corrector per coordinate direction: the Y-periodic, zero-mean field
/// whose gradient corrects a unit macroscopic gradient, continuous across the
/// membrane, plus its membrane flux trace sigma (grad chi - e_h) . n.
struct CorrectorSolution {
    std::array<std::vector<double>, 2> chi0;        // per vertex
    std::array<std::vector<double>, 2> flux_trace;  // per interface pair
};

CorrectorSolution solve_cell_correctors(const InterfaceMesh& mesh, double sigma_i,
                                        double sigma_e, double tol = 1e-12);

/// Linearized membrane relaxation on the unit cell: periodic in space, the
/// membrane law frozen at its rest conductivity, driven by an initial jump.
/// Samples the full field on the given time grid.
struct TransformResult {
    std::vector<double> t_grid;
    std::vector<std::vector<double>> fields;  // [time][vertex]
};

TransformResult relaxation_transform(const InterfaceMesh& mesh,
                                     const ModelParams& params,
                                     const std::vector<double>& initial_jump,
                                     const std::vector<double>& t_grid,
                                     double tol = 1e-12);

/// Memory corrector: the relaxation transform applied per direction to the
/// static corrector's flux trace, scaled by delta/c_m so the kernel couples
/// dimensionally to the membrane capacitance dynamics.
struct MemoryCorrector {
    std::vector<double> t_grid;
    std::array<std::vector<std::vector<double>>, 2> fields;  // [dir][time][vertex]
};

MemoryCorrector compute_memory_corrector(const InterfaceMesh& mesh,
                                         const ModelParams& params,
                                         const CorrectorSolution& correctors,
                                         const std::vector<double>& t_grid,
                                         double tol = 1e-12);

/// Homogenized coefficients: scalar mean conductivity, instantaneous
/// anisotropy correction, time-sampled memory kernel and (optionally) the
/// initial-jump source term.
struct EffectiveTensors {
    double sigma0 = 0.0;
    Mat2 A0;
    std::vector<double> t_grid;
    std::vector<Mat2> A1;
    std::vector<Vec2> F;  // empty when no initial-jump profile is supplied
};

/// All interface integrals use edge-wise trapezoid quadrature with the
/// outward (inner-to-outer) normal and the jump convention outer minus inner,
/// normalized by the cell measure.
EffectiveTensors effective_tensors(const InterfaceMesh& mesh,
                                   const CorrectorSolution& correctors,
                                   const MemoryCorrector& memory,
                                   const ModelParams& params,
                                   const TransformResult* transformed_s1 = nullptr);

/// Rest membrane conductivity sigma_m0 + beta N0 (constant in time because
/// the rest pore density is stationary).
double rest_membrane_conductivity(const ModelParams& params);

/// RC estimate of the membrane relaxation time from the rest conductivity
/// and the bulk coupling of the two media at the cell scale.
double membrane_relaxation_time(const CellGeometry& geometry,
                                const ModelParams& params);

/// Uniform kernel grid covering five relaxation times.
std::vector<double> kernel_time_grid(const CellGeometry& geometry,
                                     const ModelParams& params, int samples = 64);

/// Point location / P1 evaluation with a uniform-bin accelerator.
class FieldSampler {
public:
    explicit FieldSampler(const InterfaceMesh& mesh);
    /// Triangle containing p (first hit in deterministic order), or -1.
    int locate(const Vec2& p) const;
    double evaluate(const std::vector<double>& vertex_values, const Vec2& p) const;
    double evaluate_in(int triangle, const std::vector<double>& vertex_values,
                       const Vec2& p) const;

private:
    const InterfaceMesh* mesh_;
    int bins_ = 0;
    double cell_ = 0.0;
    std::vector<std::vector<int>> grid_;
};

/// Time-sampled macroscopic solution of the memory-kernel equation on a
/// plain (interface-free) mesh with homogeneous or affine Dirichlet data.
struct MacroSolution {
    std::vector<double> t_grid;
    std::vector<std::vector<double>> fields;  // [time][vertex]
};

MacroSolution solve_macro(const InterfaceMesh& macro_mesh,
                          const EffectiveTensors& tensors,
                          const std::function<double(Vec2)>& source_modulation,
                          const AffineField& boundary,
                          const std::vector<double>& t_grid, double tol = 1e-10);

/// Periodic microstructure run: n x n scaled cells, homogeneous Dirichlet
/// data, initial membrane jump eps * S1, nonlinear membrane dynamics.
struct InitialJumpSpec {
    double amplitude = 0.0;  // V, scales cos(arc angle) on each membrane
    std::function<double(Vec2)> modulation;  // macro envelope (empty -> 1)
};

struct MicroSolution {
    InterfaceMesh mesh;
    std::vector<double> t_grid;
    std::vector<std::vector<double>> fields;   // [time][vertex]
    std::vector<double> energy_lhs;            // cumulative bulk + jump term at t_k
    std::vector<double> interface_l2;          // integral of [u]^2 over the membranes
};

MicroSolution solve_micro(const CellGeometry& geometry, const ModelParams& params,
                          double eps, double domain_size, double h_unit,
                          const InitialJumpSpec& s1,
                          const std::vector<double>& t_grid, double tol = 1e-10);

struct ConvergenceRow {
    double eps = 0.0;
    double l1_error = 0.0;            // |u_eps - u_0| averaged over the window
    double energy_lhs = 0.0;          // max over t of the energy-estimate left side
    double interface_l2_over_eps = 0.0;
};

struct ConvergenceOptions {
    double h_unit = 0.0;       // 0 -> L/12
    int t_samples = 64;
    double s1_amplitude = 1.0;
    double window_lo = 0.3;    // interior sampling window, fractions of the domain
    double window_hi = 0.7;
    double time_lo = 0.25;     // first sampled fraction of the time grid
    int sample_points = 21;    // per axis
    double solver_tol = 1e-10;
};

std::vector<ConvergenceRow> convergence_study(const CellGeometry& geometry,
                                              const ModelParams& params,
                                              const std::vector<double>& eps_list,
                                              const ConvergenceOptions& options = {});

/// CSV serialization of the effective parameters (one header line each):
/// tensors: sigma0, A0 entries, A0 eigenvalues; kernel: t_k with A1 entries.
std::string tensors_to_csv(const EffectiveTensors& tensors);
std::string kernel_to_csv(const EffectiveTensors& tensors);

} // namespace epihom

#pragma once

#include <vector>

#include "epihom/error.hpp"

namespace epihom {

enum class MembraneModel { Static, NeuKrassowska, Relaxation };

/// Physical constants of the model. Values not fixed by the reference data
/// set (q, sigma_m0, the static-law and relaxation-law constants) carry
/// documented defaults and are meant to be overridden per experiment config.
struct ModelParams {
    double sigma_i = 0.455;    // S/m, intracellular conductivity
    double sigma_e = 5.0;      // S/m, extracellular conductivity
    double L = 2e-4;           // m, unit cell size
    double r = 0.5e-4;         // m, cell radius
    double delta = 5e-9;       // m, membrane thickness
    double r_p = 0.76;         // pore radius (model units, see README)
    double sigma_p = 0.0746;   // pore conductivity (model units)
    double V_ep = 0.258;       // V, characteristic electropermeabilization voltage
    double alpha = 1e9;        // 1/(m^2 s), pore creation rate
    double N0 = 1.5e9;         // 1/m^2, equilibrium pore density
    double c_m = 9.5e-12;      // membrane capacitance (enters as c_m/delta)
    double q = 2.46;           // dimensionless exponent, not in the reference set
    double sigma_m0 = 1.9;     // S/m, baseline membrane conductivity (placeholder)
    double beta = 0.0;         // S/m per (1/m^2), EP conductance coefficient
    double M = 1.5;            // V, voltage cutoff level
    double u_ref = 0.0;        // V, rest potential
    double K = 0.0;            // S/m, static-law amplitude
    double beta_exp = 1.0;     // 1/V, static-law exponent
    double tau_ep = 1e-6;      // s, relaxation-law fast time constant
    double tau_res = 1e-3;     // s, relaxation-law slow time constant
    double k_ep = 40.0;        // 1/V, relaxation-law switching steepness

    /// Table-backed defaults; beta is filled in from the pore geometry.
    static ModelParams defaults();

    void validate() const;
};

/// Per-interface-node membrane state at one time level.
struct MembraneState {
    std::vector<double> v;  // V, transmembrane potential
    std::vector<double> N;  // 1/m^2, pore density
    double t = 0.0;         // s
};

/// Piecewise-linear voltage sample record used by the closed-form evaluation.
struct VoltageHistory {
    std::vector<double> times;
    std::vector<double> values;
};

/// dN/dt = alpha e^{(v/V_ep)^2} (1 - (N/N0) e^{-q (v/V_ep)^2}).
double pore_density_rate(double v, double N, const ModelParams& p);

/// Variation-of-constants representation of the pore density at time t, with
/// the inner time integrals evaluated by composite trapezoid on the stored
/// history grid.
double pore_density_closed_form(const VoltageHistory& history, double t,
                                const ModelParams& p);

/// Stationary pore density for a held voltage: N0 e^{q (v/V_ep)^2}.
double pore_density_equilibrium(double v, const ModelParams& p);

/// Relaxation-law rate: max over the two time constants of
/// (beta(v) - N) / tau, with beta(v) = (1 + tanh(k_ep(|v| - V_ep)))/2.
double relaxation_rate(double v, double N, const ModelParams& p);

/// Membrane conductivity under the selected law.
double membrane_conductivity(MembraneModel model, double v, double N,
                             const ModelParams& p);

/// sign(v) * min(|v|, M).
double clamp_voltage(double v, double M);

/// 2 pi r_p^2 sigma_p delta / (pi r_p + 2 delta).
double pore_conductance_coefficient(const ModelParams& p);

/// One RK4 step of the pore dynamics (or relaxation dynamics) with the
/// voltage frozen over the step.
double advance_pore_density(MembraneModel model, double v, double N, double dt,
                            const ModelParams& p);

} // namespace epihom

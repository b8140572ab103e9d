#pragma once

#include <string>
#include <vector>

#include "epihom/geometry.hpp"
#include "epihom/membrane.hpp"

namespace epihom {

enum class ExperimentId {
    ConductivityRatio,
    Excentricity,
    VolumeFraction,
    LatticeAngle,
    SingleCell,
    Convergence,
};

std::string experiment_name(ExperimentId id);

struct NumericsOptions {
    double h_m = 0.0;            // mesh target, 0 -> L/12
    int t_samples = 64;          // kernel grid samples
    double dt_s = 2e-9;          // single-cell time step
    double T_s = 2e-6;           // single-cell final time
    double field_V_per_m = 1.5e4; // applied field for the single-cell demo
    double solver_tol = 1e-12;
    int sample_points = 21;      // convergence window lattice per axis
};

/// Declarative description of one experiment run.
struct SweepSpec {
    ExperimentId experiment = ExperimentId::SingleCell;
    std::vector<double> swept_values;
    CellGeometry geometry;
    ModelParams params;
    MembraneModel model = MembraneModel::NeuKrassowska;
    NumericsOptions numerics;
    std::string output_dir = "out";

    void validate() const;

    /// Geometry and parameters for one swept point of this experiment.
    CellGeometry point_geometry(double value) const;
    ModelParams point_params(double value) const;

    double h_target() const {
        return numerics.h_m > 0.0 ? numerics.h_m : geometry.unit_cell_size / 12.0;
    }
};

/// Strict parser: unknown keys are rejected by name, all physical fields use
/// unit-suffixed keys, missing optional fields take documented defaults.
SweepSpec parse_config(const std::string& path);
SweepSpec parse_config_text(const std::string& json_text);

/// Canonical echo of a spec with every default filled in.
std::string normalized_dump(const SweepSpec& spec);

/// FNV-1a hash of the normalized dump, printed as hex.
std::string config_hash(const SweepSpec& spec);

} // namespace epihom

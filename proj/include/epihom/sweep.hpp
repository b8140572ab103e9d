#pragma once

#include <string>
#include <vector>

#include "epihom/cell_solver.hpp"
#include "epihom/config.hpp"
#include "epihom/homogenization.hpp"

namespace epihom {

struct SweepPoint {
    double value = 0.0;
    bool failed = false;
    std::string error;       // error code when failed
    double sigma0 = 0.0;
    double lam1_A0 = 0.0, lam2_A0 = 0.0;
    double lam1_A1 = 0.0, lam2_A1 = 0.0;  // of A1(0)
    bool degenerate = false;              // ||A0|| below the ratio floor
    double wall_seconds = 0.0;
};

struct SweepResult {
    SweepSpec spec;
    std::vector<SweepPoint> points;
};

/// Evaluates the effective parameters at every swept value. Points run on a
/// worker pool (EPIHOM_WORKERS overrides the size); results keep input order
/// and per-point failures are recorded without aborting the sweep.
SweepResult run_sweep(const SweepSpec& spec);

/// Writes sweep.csv, the three sweep plots and the run manifest into
/// spec.output_dir. The manifest is the only output carrying wall times.
void emit_outputs(const SweepResult& result, const std::string& dir);

struct SingleCellOutputs {
    TmpTrace trace;
    MonitorReport monitor;
};

/// Runs the single-cell transmembrane-voltage demonstration and writes
/// trace.csv, profile.csv and the two line plots.
SingleCellOutputs run_single_cell_demo(const SweepSpec& spec);

/// Runs the eps-convergence study (swept values are the eps list, descending
/// internally) and writes convergence.csv, tensors.csv and kernel.csv.
std::vector<ConvergenceRow> run_convergence_experiment(const SweepSpec& spec);

} // namespace epihom

#pragma once

#include <vector>

#include "epihom/fem.hpp"
#include "epihom/mesh.hpp"

namespace epihom {

/// Affine scalar field c + gx*x + gy*y; harmonic by construction, so its
/// trace is admissible Dirichlet data for the transmission problems.
struct AffineField {
    double c = 0.0;
    double gx = 0.0;
    double gy = 0.0;

    double operator()(const Vec2& p) const { return c + gx * p.x + gy * p.y; }
    bool is_zero() const { return c == 0.0 && gx == 0.0 && gy == 0.0; }
};

/// Semi-implicit integrator core for the bulk/membrane coupling: the Laplace
/// part and the linear jump relaxation are implicit, the membrane
/// conductivity is frozen over the step. One instance owns its sparse pattern
/// and reuses it every step; per-step interface coefficients land on
/// precomputed CSR slots.
class TransmissionStepper {
public:
    struct Options {
        double capacitance_over_delta = 0.0;  // c_m / delta
        double dt = 0.0;
        double solver_tol = 1e-12;
        DofMap::Boundary boundary = DofMap::Boundary::Plain;
        std::vector<std::pair<int, double>> dirichlet;  // (dof, value)
        int pin_dof = -1;            // gauge fix for pure-periodic systems
        bool zero_mean_shift = false;
    };

    TransmissionStepper(const InterfaceMesh& mesh, const DofMap& dofs,
                        double sigma_inner, double sigma_outer, Options options);

    /// Advances the jump one step: relax_coef[p] = gamma_p * sigma_m,p / delta
    /// is the frozen implicit relaxation coefficient per interface pair.
    /// Returns the new jump values.
    std::vector<double> advance(const std::vector<double>& v_old,
                                const std::vector<double>& relax_coef);

    /// Bulk solve with the jump itself prescribed (initial fields, Schur
    /// operator columns).
    void solve_prescribed_jump(const std::vector<double>& jump);

    /// Raw stiffness residual at the outer-copy dof of each interface pair,
    /// i.e. the tested membrane flux of the current bulk field.
    std::vector<double> interface_flux_residual() const;

    const std::vector<double>& field() const { return u_; }
    std::vector<double> jump() const { return dofs_->jump_values(u_); }
    const std::vector<double>& weights() const { return weights_; }
    const DofMap& dofs() const { return *dofs_; }

private:
    void apply_shift_and_store(std::vector<double> u);
    void ensure_merged();
    void base_multiply(const std::vector<double>& x, std::vector<double>& y) const;

    const InterfaceMesh* mesh_;
    const DofMap* dofs_;
    Options opt_;
    SparseMatrix pattern_;              // finalized CSR with interface slots
    std::vector<double> base_values_;   // pure stiffness values
    std::vector<int> slot_aa_, slot_ab_, slot_ba_, slot_bb_;
    std::vector<double> weights_;
    std::vector<double> lumped_area_;   // per dof, for the mean shift
    double total_area_ = 0.0;
    std::vector<double> u_;
    DofMap merged_;                     // continuous space for prescribed-jump solves
    SparseMatrix merged_matrix_;        // pre-eliminated continuous stiffness
    std::vector<double> merged_rhs_base_;
    std::vector<int> jump_to_merged_;   // dof translation
    bool merged_ready_ = false;
    double sigma_inner_ = 0.0, sigma_outer_ = 0.0;
};

} // namespace epihom

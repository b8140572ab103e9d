#pragma once

#include <vector>

#include "epihom/linalg.hpp"
#include "epihom/mesh.hpp"

namespace epihom {

/// Maps mesh vertices to equation unknowns. In Jump mode the duplicated
/// membrane vertices keep distinct dofs (the field may jump); in merged mode
/// each interface pair shares one dof (continuous field). Periodic variants
/// additionally identify opposite points of the outer square boundary.
class DofMap {
public:
    enum class Interface { Jump, Merged };
    enum class Boundary { Plain, Periodic };

    static DofMap build(const InterfaceMesh& mesh, Interface iface,
                        Boundary boundary = Boundary::Plain);

    int dof_count() const { return n_dofs_; }
    int dof(int vertex) const { return vertex_to_dof_[vertex]; }
    const std::vector<std::pair<int, int>>& jump_couples() const { return couples_; }
    const std::vector<int>& boundary_dofs() const { return boundary_dofs_; }

    /// v_p = u[dof_out] - u[dof_in] per interface pair (Jump mode only).
    std::vector<double> jump_values(const std::vector<double>& u) const;
    /// out[dof_out] += w_p, out[dof_in] -= w_p (transpose of jump_values).
    void add_jump_transpose(const std::vector<double>& w,
                            std::vector<double>& out) const;

private:
    int n_dofs_ = 0;
    std::vector<int> vertex_to_dof_;
    std::vector<std::pair<int, int>> couples_;
    std::vector<int> boundary_dofs_;
};

/// Square sparse system: matrix, right-hand side and an optional Dirichlet
/// constraint set eliminated symmetrically before solving.
struct SparseSystem {
    SparseMatrix matrix;
    std::vector<double> rhs;
    std::vector<std::pair<int, double>> dirichlet;

    void finalize() {
        matrix.finalize();
        if (!dirichlet.empty()) matrix.eliminate_dirichlet(dirichlet, rhs);
    }
};

/// P1 stiffness with piecewise-constant conductivity per subdomain tag.
/// No coupling across the membrane; that enters through the interface terms.
SparseSystem assemble_stiffness(const InterfaceMesh& mesh, const DofMap& dofs,
                                double sigma_inner, double sigma_outer);

/// P1 stiffness for a constant matrix coefficient (macro problems).
SparseSystem assemble_stiffness_tensor(const InterfaceMesh& mesh, const DofMap& dofs,
                                       const Mat2& coefficient);

/// Lumped membrane mass acting on the jump variable: a diagonal system of
/// dimension pair_count whose row sums are the membrane patch measures.
SparseSystem assemble_interface_mass(const InterfaceMesh& mesh);

/// Finalizes (constraints included) and runs preconditioned CG.
std::vector<double> solve(SparseSystem& system, double tol,
                          const std::vector<double>* initial_guess = nullptr);

} // namespace epihom

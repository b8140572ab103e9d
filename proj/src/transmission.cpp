#include "epihom/transmission.hpp"

#include <algorithm>
#include <cmath>

namespace epihom {

namespace {

int csr_slot(const SparseMatrix& m, int row, int col) {
    const auto& ptr = m.row_ptr();
    const auto& cols = m.cols();
    int lo = ptr[row], hi = ptr[row + 1];
    auto it = std::lower_bound(cols.begin() + lo, cols.begin() + hi, col);
    if (it == cols.begin() + hi || *it != col)
        throw Error("internal", "missing CSR slot");
    return static_cast<int>(it - cols.begin());
}

} // namespace

TransmissionStepper::TransmissionStepper(const InterfaceMesh& mesh, const DofMap& dofs,
                                         double sigma_inner, double sigma_outer,
                                         Options options)
    : mesh_(&mesh), dofs_(&dofs), opt_(std::move(options)),
      sigma_inner_(sigma_inner), sigma_outer_(sigma_outer) {
    SparseSystem sys = assemble_stiffness(mesh, dofs, sigma_inner, sigma_outer);
    // Reserve slots for the interface coupling before compressing.
    for (const auto& [a, b] : dofs.jump_couples()) {
        sys.matrix.add(a, a, 0.0);
        sys.matrix.add(a, b, 0.0);
        sys.matrix.add(b, a, 0.0);
        sys.matrix.add(b, b, 0.0);
    }
    sys.matrix.finalize();
    pattern_ = std::move(sys.matrix);
    base_values_ = pattern_.values();

    const auto& couples = dofs.jump_couples();
    slot_aa_.reserve(couples.size());
    for (const auto& [a, b] : couples) {
        slot_aa_.push_back(csr_slot(pattern_, a, a));
        slot_ab_.push_back(csr_slot(pattern_, a, b));
        slot_ba_.push_back(csr_slot(pattern_, b, a));
        slot_bb_.push_back(csr_slot(pattern_, b, b));
    }
    weights_ = mesh.interface_weights();

    if (opt_.dirichlet.empty() && opt_.pin_dof >= 0)
        opt_.dirichlet.emplace_back(opt_.pin_dof, 0.0);

    lumped_area_.assign(dofs.dof_count(), 0.0);
    for (const auto& t : mesh.triangles) {
        double third = mesh.triangle_area(t) / 3.0;
        for (int k = 0; k < 3; ++k) lumped_area_[dofs.dof(t.v[k])] += third;
        total_area_ += 3.0 * third;
    }

    u_.assign(dofs.dof_count(), 0.0);
    for (const auto& [d, g] : opt_.dirichlet) u_[d] = g;
}

void TransmissionStepper::apply_shift_and_store(std::vector<double> u) {
    if (opt_.zero_mean_shift) {
        double mean = 0.0;
        for (int d = 0; d < static_cast<int>(u.size()); ++d)
            mean += lumped_area_[d] * u[d];
        mean /= total_area_;
        for (double& x : u) x -= mean;
    }
    u_ = std::move(u);
}

std::vector<double> TransmissionStepper::advance(const std::vector<double>& v_old,
                                                 const std::vector<double>& relax_coef) {
    int n = dofs_->dof_count();
    SparseMatrix work = pattern_;
    work.values() = base_values_;
    double cap_rate = opt_.capacitance_over_delta / opt_.dt;
    auto& vals = work.values();
    for (std::size_t p = 0; p < slot_aa_.size(); ++p) {
        double coef = weights_[p] * (cap_rate + relax_coef[p]);
        vals[slot_aa_[p]] += coef;
        vals[slot_bb_[p]] += coef;
        vals[slot_ab_[p]] -= coef;
        vals[slot_ba_[p]] -= coef;
    }
    std::vector<double> rhs(n, 0.0);
    const auto& couples = dofs_->jump_couples();
    for (std::size_t p = 0; p < couples.size(); ++p) {
        double r = weights_[p] * cap_rate * v_old[p];
        rhs[couples[p].second] += r;
        rhs[couples[p].first] -= r;
    }
    work.eliminate_dirichlet(opt_.dirichlet, rhs);

    CgOptions cg;
    cg.tol = opt_.solver_tol;
    cg.initial_guess = &u_;
    apply_shift_and_store(cg_solve(work, rhs, cg));
    return jump();
}

void TransmissionStepper::ensure_merged() {
    if (merged_ready_) return;
    merged_ = DofMap::build(*mesh_, DofMap::Interface::Merged, opt_.boundary);
    jump_to_merged_.assign(dofs_->dof_count(), -1);
    for (std::size_t v = 0; v < mesh_->vertices.size(); ++v)
        jump_to_merged_[dofs_->dof(static_cast<int>(v))] =
            merged_.dof(static_cast<int>(v));

    SparseSystem sys = assemble_stiffness(*mesh_, merged_, sigma_inner_, sigma_outer_);
    std::vector<std::pair<int, double>> constraints;
    if (opt_.pin_dof >= 0) {
        constraints.emplace_back(jump_to_merged_[opt_.pin_dof], 0.0);
    } else {
        for (const auto& [d, g] : opt_.dirichlet) constraints.emplace_back(jump_to_merged_[d], g);
    }
    std::sort(constraints.begin(), constraints.end());
    constraints.erase(std::unique(constraints.begin(), constraints.end()),
                      constraints.end());
    sys.matrix.finalize();
    sys.rhs.assign(merged_.dof_count(), 0.0);
    sys.matrix.eliminate_dirichlet(constraints, sys.rhs);
    merged_matrix_ = std::move(sys.matrix);
    merged_rhs_base_ = std::move(sys.rhs);
    merged_ready_ = true;
}

void TransmissionStepper::solve_prescribed_jump(const std::vector<double>& jump) {
    ensure_merged();
    int n = dofs_->dof_count();
    // Lift carrying the jump on the outer membrane copies only.
    std::vector<double> lift(n, 0.0);
    const auto& couples = dofs_->jump_couples();
    for (std::size_t p = 0; p < couples.size(); ++p)
        lift[couples[p].second] = jump[p];

    // Raw stiffness times the lift, restricted to the continuous test space.
    std::vector<double> y(n, 0.0);
    base_multiply(lift, y);

    std::vector<double> rhs = merged_rhs_base_;
    std::vector<char> fixed(merged_.dof_count(), 0);
    if (opt_.pin_dof >= 0) {
        fixed[jump_to_merged_[opt_.pin_dof]] = 1;
    } else {
        for (const auto& [d, g] : opt_.dirichlet) fixed[jump_to_merged_[d]] = 1;
    }
    for (int jd = 0; jd < n; ++jd) {
        int md = jump_to_merged_[jd];
        if (!fixed[md]) rhs[md] -= y[jd];
    }

    CgOptions cg;
    cg.tol = opt_.solver_tol;
    std::vector<double> w = cg_solve(merged_matrix_, rhs, cg);

    std::vector<double> u(n, 0.0);
    for (int jd = 0; jd < n; ++jd) u[jd] = lift[jd] + w[jump_to_merged_[jd]];
    apply_shift_and_store(std::move(u));
}

void TransmissionStepper::base_multiply(const std::vector<double>& x,
                                        std::vector<double>& y) const {
    const auto& ptr = pattern_.row_ptr();
    const auto& cols = pattern_.cols();
    for (int i = 0; i < dofs_->dof_count(); ++i) {
        double s = 0.0;
        for (int k = ptr[i]; k < ptr[i + 1]; ++k) s += base_values_[k] * x[cols[k]];
        y[i] = s;
    }
}

std::vector<double> TransmissionStepper::interface_flux_residual() const {
    std::vector<double> y(dofs_->dof_count(), 0.0);
    base_multiply(u_, y);
    const auto& couples = dofs_->jump_couples();
    std::vector<double> r(couples.size());
    for (std::size_t p = 0; p < couples.size(); ++p) r[p] = y[couples[p].second];
    return r;
}

} // namespace epihom

/**
 * @file poisson.hpp
 * @brief Coupled solves: the saturated equation with a self-consistent
 *        repulsive potential, -Laplace phi = (e/2) |u|^2 with homogeneous
 *        Dirichlet data for phi, iterated by plain alternation.
 *
 * The Poisson leg is a single factorized solve K phi = W (e/2) |u|^2, so
 * two exact discrete facts are available as checks: the energy identity
 * phi^T K phi = (e/2) sum_i w_i phi_i |u_i|^2 (multiply the linear system
 * by phi), and phi >= 0 up to roundoff (K is an M-matrix and the load is
 * nonnegative). Truncated whole-space runs keep the Dirichlet condition for
 * phi; the induced truncation error decays like the Newtonian potential.
 */

#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "domain.hpp"
#include "solver.hpp"

namespace satnls {

/// Solve -Laplace_h phi = (e/2) |u|^2 with homogeneous Dirichlet data.
/// The discrete maximum principle keeps phi nonnegative; a materially
/// negative minimum indicates a broken solve and throws.
inline VecR solve_poisson(const DiscreteDomain& dom, const VecC& u, double e) {
    if (u.size() != dom.size())
        throw std::invalid_argument("solve_poisson: field size mismatch");
    if (!(e >= 0.0))
        throw std::invalid_argument("solve_poisson: coupling e must be >= 0");
    if (dom.bc() != Boundary::dirichlet)
        throw std::invalid_argument("solve_poisson: potential needs Dirichlet boundaries");
    VecC load(dom.size());
    for (long i = 0; i < dom.size(); ++i)
        load[i] = dom.weights()[i] * 0.5 * e * std::norm(u[i]);
    const VecC phi_c = dom.solve_shifted(0.0, load);
    VecR phi = phi_c.real();
    const double linf = phi.size() ? phi.cwiseAbs().maxCoeff() : 0.0;
    if (phi.size() && phi.minCoeff() < -1e-10 * std::max(linf, 1e-300))
        throw std::runtime_error("solve_poisson: maximum principle violated");
    return phi;
}

/// Relative defect of phi^T K phi = (e/2) sum w phi |u|^2, which holds
/// exactly (in algebra) for the discrete Poisson solution.
inline double sp_identity_residual(const DiscreteDomain& dom, const VecR& phi,
                                   const VecC& u, double e) {
    if (phi.size() != dom.size() || u.size() != dom.size())
        throw std::invalid_argument("sp_identity_residual: field size mismatch");
    const VecR Kphi = dom.stiffness() * phi;
    const double lhs = phi.dot(Kphi);
    double rhs = 0.0;
    for (long i = 0; i < dom.size(); ++i)
        rhs += dom.weights()[i] * 0.5 * e * phi[i] * std::norm(u[i]);
    const double scale = std::max(std::abs(lhs), 1e-300);
    return std::abs(lhs - rhs) / scale;
}

struct SpOptions {
    double tol_sp = 1e-8;  // outer stop on both H1 increments, relative
    int max_outer = 40;
};

struct SpTraceEntry {
    int k = 0;
    double du_rel = -1.0;   // -1 on the first pass (no previous iterate)
    double dphi_rel = -1.0;
    double phi_min = 0.0;
    double identity_rel = 0.0;
};

struct SpState {
    SolveReport schro;  // final saturated solve, potential included
    VecR phi;
    double e = 0.0;
    int outer_iters = 0;
    bool converged = false;
    std::vector<SpTraceEntry> history;
    double identity_rel = 0.0;  // after the final Poisson solve
    double phi_min = 0.0;       // most negative phi value seen over all iterations
    std::string failure;
};

/// Alternating construction: phi_0 = 0, u_k solves the saturated equation
/// with potential phi_{k-1}, phi_k solves the Poisson equation with |u_k|^2.
/// Stops when both H1 increments fall below tol_sp (relative). The problem
/// passed in must not carry its own potential; the potential is the unknown.
inline SpState solve_sp(const ProblemSpec& p, double e, SolverOptions opts = {},
                        SpOptions sp = {}) {
    if (!p.dom) throw std::invalid_argument("solve_sp: missing domain");
    if (p.phi.size() != 0)
        throw std::invalid_argument("solve_sp: the potential is computed, leave phi empty");
    if (!(e >= 0.0)) throw std::invalid_argument("solve_sp: coupling e must be >= 0");
    if (p.dom->bc() != Boundary::dirichlet)
        throw std::invalid_argument("solve_sp: potential needs Dirichlet boundaries");
    if (sp.max_outer < 1) throw std::invalid_argument("solve_sp: max_outer must be >= 1");

    const DiscreteDomain& dom = *p.dom;
    SpState state;
    state.e = e;
    state.phi = VecR::Zero(dom.size());

    ProblemSpec pk = p;
    VecC u_prev;
    VecR phi_prev;
    bool have_prev = false;
    for (int k = 1; k <= sp.max_outer; ++k) {
        pk.phi = state.phi.cast<Complex>();
        const VecC* warm = have_prev ? &u_prev : nullptr;
        SolveReport rep = solve_saturated(pk, opts, warm);
        if (!rep.converged) {
            state.schro = std::move(rep);
            state.failure = "saturated solve failed at outer iteration " +
                            std::to_string(k) + ": " + state.schro.failure;
            state.outer_iters = k;
            return state;
        }
        VecR phi_new = solve_poisson(dom, rep.state.u, e);

        SpTraceEntry tr;
        tr.k = k;
        tr.phi_min = phi_new.size() ? phi_new.minCoeff() : 0.0;
        tr.identity_rel = sp_identity_residual(dom, phi_new, rep.state.u, e);
        if (have_prev) {
            tr.du_rel = norms(dom, (rep.state.u - u_prev).eval()).h1 /
                        (1.0 + rep.norm.h1);
            const VecC dphi = (phi_new - phi_prev).cast<Complex>();
            tr.dphi_rel = norms(dom, dphi).h1 /
                          (1.0 + norms(dom, phi_new.cast<Complex>().eval()).h1);
        }
        state.history.push_back(tr);
        state.phi_min = std::min(state.phi_min, tr.phi_min);
        state.identity_rel = tr.identity_rel;
        state.outer_iters = k;

        u_prev = rep.state.u;
        phi_prev = phi_new;
        state.phi = std::move(phi_new);
        state.schro = std::move(rep);
        have_prev = true;

        if (tr.du_rel >= 0.0 && tr.du_rel <= sp.tol_sp && tr.dphi_rel <= sp.tol_sp) {
            state.converged = true;
            return state;
        }
    }
    state.failure = "alternation did not converge within " +
                    std::to_string(sp.max_outer) + " outer iterations";
    return state;
}

/// Coupled a-priori ratio: (||u||_H1^2 + ||u||_L1 + e int phi |u|^2) over
/// the squared dual norm of F. Boundedness of this ratio across source
/// scalings is the testable content of the coupled energy bound.
inline double sp_bound_check(const SpState& s, const ProblemSpec& p) {
    const DiscreteDomain& dom = *p.dom;
    const NormSet n = s.schro.norm;
    double coupling = 0.0;
    for (long i = 0; i < dom.size(); ++i)
        coupling += dom.weights()[i] * s.e * s.phi[i] * std::norm(s.schro.state.u[i]);
    const double fdual = dual_norm(dom, p.F);
    if (fdual <= 0.0) return 0.0;
    return (n.h1 * n.h1 + n.l1 + coupling) / (fdual * fdual);
}

} // namespace satnls

/**
 * @file runner.hpp
 * @brief Experiment runner: executes a parsed configuration, writes the CSV
 *        artifacts and the run manifest, and returns a process exit status.
 *
 * All numeric output is printed with %.17g through snprintf, so reruns with
 * the same config and seed are bit-identical. No timestamps are emitted.
 */

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "localization.hpp"
#include "poisson.hpp"
#include "solver.hpp"

namespace satnls {

enum class RunStatus : int {
    ok = 0,
    parse_error = 2,
    solver_failure = 3,
    regime_error = 4,
};

namespace detail {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string sanitize(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n') c = ';';
    return s;
}

inline std::ofstream open_out(const std::string& dir, const std::string& file) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir + "/" + file, std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write " + dir + "/" + file);
    return out;
}

inline std::string version_string() {
#ifdef SATNLS_GIT_DESCRIBE
    return SATNLS_GIT_DESCRIBE;
#else
    return "unknown";
#endif
}

/// What a preset promises, in the manifest, so a reader of the artifacts
/// knows which numbers to compare against which thresholds.
inline std::string preset_check_line(const std::string& preset) {
    if (preset == "null_solution")
        return "vanishing solution with section F/a; thresholds h1_norm <= 1e-6, "
               "section_error_inf <= 1e-6";
    if (preset == "compact_support" || preset == "compact_support_2d")
        return "interior support margin >= 0.5 at relative threshold 1e-8; "
               "support radius drift <= 2h across refinements";
    if (preset == "compact_support_tail")
        return "support stays compact with a constant tail of 1e-3 outside the box";
    if (preset == "sp_square")
        return "coupled alternation converges; potential identity residual <= 1e-10; "
               "phi >= -1e-12 * max(phi)";
    if (preset == "soliton")
        return "standing-wave residual invariant in time within 1e-12; "
               "support radius constant across samples";
    return "none (user configuration)";
}

} // namespace detail

inline void write_manifest(const std::string& dir, const ExperimentConfig& cfg,
                           const std::string& command, const std::string& preset) {
    auto out = detail::open_out(dir, "run_manifest.txt");
    out << "command = " << command << "\n";
    out << "config = " << cfg.name << "\n";
    out << "preset = " << (preset.empty() ? "none" : preset) << "\n";
    out << "check = " << detail::preset_check_line(preset) << "\n";
    out << "version = " << detail::version_string() << "\n";
    out << "seed = " << cfg.seed << "\n";
    out << "domain.dim = " << cfg.domain.dim << "\n";
    out << "domain.bc = "
        << (cfg.domain.bc == Boundary::dirichlet ? "dirichlet" : "neumann") << "\n";
    for (int d = 0; d < cfg.domain.dim; ++d) {
        const char ax = d == 0 ? 'x' : 'y';
        out << "domain." << ax << "min = " << detail::fmt(cfg.domain.axis[d].lo) << "\n";
        out << "domain." << ax << "max = " << detail::fmt(cfg.domain.axis[d].hi) << "\n";
        out << "domain." << ax << "cells = " << cfg.domain.axis[d].cells << "\n";
    }
    out << "a = " << detail::fmt(cfg.a.real()) << " + " << detail::fmt(cfg.a.imag())
        << "i\n";
    out << "b = " << detail::fmt(cfg.b.real()) << " + " << detail::fmt(cfg.b.imag())
        << "i\n";
    out << "e = " << detail::fmt(cfg.e) << "\n";
    out << "solver.tol_fp = " << detail::fmt(cfg.solver.tol_fp) << "\n";
    out << "solver.tol_cont = " << detail::fmt(cfg.solver.tol_cont) << "\n";
    out << "solver.n_start = " << detail::fmt(cfg.solver.n_start) << "\n";
    out << "solver.n_max = " << detail::fmt(cfg.solver.n_max) << "\n";
    out << "solver.delta = " << detail::fmt(cfg.solver.delta) << "\n";
    out << "solver.method = "
        << (cfg.solver.method == InnerMethod::lagged ? "lagged" : "damped") << "\n";
    out << "analysis.support_threshold_rel = "
        << detail::fmt(cfg.support_threshold_rel) << "\n";
}

inline void write_solve_report(const std::string& dir, const SolveReport& rep,
                               const ExperimentConfig& cfg) {
    auto out = detail::open_out(dir, "solve_report.csv");
    out << "key,value\n";
    auto row = [&](const char* k, const std::string& v) { out << k << "," << v << "\n"; };
    auto num = [&](const char* k, double v) { row(k, detail::fmt(v)); };
    row("converged", rep.converged ? "1" : "0");
    row("failure", detail::sanitize(rep.failure));
    num("a_re", cfg.a.real());
    num("a_im", cfg.a.imag());
    num("b_re", cfg.b.real());
    num("b_im", cfg.b.imag());
    num("n_final", rep.n_final);
    num("delta", rep.delta);
    num("tol_cont_used", rep.tol_cont_used);
    row("stages", std::to_string(rep.stages.size()));
    long inner = 0;
    for (const auto& s : rep.stages) inner += s.iters;
    row("total_inner_iters", std::to_string(inner));
    num("norm_l1", rep.norm.l1);
    num("norm_l2", rep.norm.l2);
    num("norm_h1_semi", rep.norm.h1_semi);
    num("norm_h1", rep.norm.h1);
    num("norm_linf", rep.norm.linf);
    num("residual_inf", rep.residual_inf);
    num("residual_section_inf", rep.residual_section_inf);
    num("scale_u", rep.scale_u);
    num("support_threshold", rep.support_threshold);
    row("support_count", std::to_string(rep.support_count));
    num("identity_real_rel", rep.identity.real_rel);
    num("identity_imag_rel", rep.identity.imag_rel);
    num("apriori_ratio", rep.apriori_ratio);
}

inline void write_field(const std::string& dir, const DiscreteDomain& dom,
                        const VecC& u, const VecC& section, const VecR* phi) {
    auto out = detail::open_out(dir, "field.csv");
    out << "x,y,u_re,u_im,u_abs,section_re,section_im,phi\n";
    for (long i = 0; i < dom.size(); ++i) {
        out << detail::fmt(dom.x_of(i)) << "," << detail::fmt(dom.y_of(i)) << ","
            << detail::fmt(u[i].real()) << "," << detail::fmt(u[i].imag()) << ","
            << detail::fmt(std::abs(u[i])) << ","
            << detail::fmt(section.size() ? section[i].real() : 0.0) << ","
            << detail::fmt(section.size() ? section[i].imag() : 0.0) << ","
            << detail::fmt(phi ? (*phi)[i] : 0.0) << "\n";
    }
}

inline void write_stages(const std::string& dir, const std::vector<StageTrace>& stages) {
    auto out = detail::open_out(dir, "stages.csv");
    out << "n,iters,step_rel,map_gap,sup_u,diff_prev,theta\n";
    for (const auto& s : stages) {
        out << detail::fmt(s.n) << "," << s.iters << "," << detail::fmt(s.step_rel)
            << "," << detail::fmt(s.map_gap) << "," << detail::fmt(s.sup_u) << ","
            << detail::fmt(s.diff_prev) << "," << detail::fmt(s.theta) << "\n";
    }
}

inline void write_profile(const std::string& dir, const LocalEnergyProfile& prof) {
    auto out = detail::open_out(dir, "profile.csv");
    out << "shell,r,grad_energy,l1_mass,l2_mass,source_pairing,flux\n";
    for (int j = 1; j <= prof.nshells(); ++j) {
        out << j << "," << detail::fmt(prof.rho[j]) << "," << detail::fmt(prof.E[j])
            << "," << detail::fmt(prof.b[j]) << "," << detail::fmt(prof.l2[j]) << ","
            << detail::fmt(prof.fint[j]) << "," << detail::fmt(prof.flux[j]) << "\n";
    }
}

/// classify: regime report for the configured coefficients, no solve.
inline RunStatus run_classify(const ExperimentConfig& cfg, const std::string& dir) {
    const ProblemSpec p = cfg.problem();
    const double f_inf = p.F.size() ? p.F.cwiseAbs().maxCoeff() : 0.0;
    const RegimeReport rr = classify(cfg.a, cfg.b, summarize(p.phi), f_inf);
    write_manifest(dir, cfg, "classify", "");
    auto out = detail::open_out(dir, "classify.csv");
    out << "name,ok\n";
    for (const auto& r : rr.reasons)
        out << r.name << "," << (r.ok ? 1 : 0) << "\n";
    out << "existence_ok," << (rr.existence_ok ? 1 : 0) << "\n";
    out << "uniqueness_ok," << (rr.uniqueness_ok ? 1 : 0) << "\n";
    out << "null_solution_possible," << (rr.null_solution_possible ? 1 : 0) << "\n";
    return RunStatus::ok;
}

namespace detail {

inline RunStatus write_regime_failure(const std::string& dir, const RegimeError& ex) {
    auto out = open_out(dir, "regime.csv");
    out << "name,ok\n";
    for (const auto& r : ex.report.reasons)
        out << r.name << "," << (r.ok ? 1 : 0) << "\n";
    return RunStatus::regime_error;
}

} // namespace detail

/// solve: one stationary solve, full artifact set.
inline RunStatus run_solve(const ExperimentConfig& cfg, const std::string& dir,
                           const std::string& preset = "") {
    write_manifest(dir, cfg, "solve", preset);
    const ProblemSpec p = cfg.problem();
    SolveReport rep;
    try {
        rep = solve_saturated(p, cfg.solver);
    } catch (const RegimeError& ex) {
        return detail::write_regime_failure(dir, ex);
    }
    write_solve_report(dir, rep, cfg);
    write_field(dir, *p.dom, rep.state.u, rep.section.U, nullptr);
    write_stages(dir, rep.stages);
    return rep.converged ? RunStatus::ok : RunStatus::solver_failure;
}

/// profile: solve, then ball-energy profile, inequality margins and the
/// vanishing-radius evaluation around the configured center.
inline RunStatus run_profile(const ExperimentConfig& cfg, const std::string& dir,
                             const std::string& preset = "") {
    write_manifest(dir, cfg, "profile", preset);
    const ProblemSpec p = cfg.problem();
    SolveReport rep;
    try {
        rep = solve_saturated(p, cfg.solver);
    } catch (const RegimeError& ex) {
        return detail::write_regime_failure(dir, ex);
    }
    write_solve_report(dir, rep, cfg);
    write_field(dir, *p.dom, rep.state.u, rep.section.U, nullptr);
    write_stages(dir, rep.stages);

    const LocalEnergyProfile prof =
        local_profile(*p.dom, rep.state.u, cfg.profile_x, cfg.profile_y, -1.0, &p.F);
    write_profile(dir, prof);

    const MarginReport grad =
        check_localization_inequality(prof, cfg.m_const, LocalForm::gradient_flux);
    const MarginReport h1 =
        check_localization_inequality(prof, cfg.m_const, LocalForm::h1_flux);
    const MarginReport h1s =
        check_localization_inequality(prof, cfg.m_const, LocalForm::h1_flux_source);
    {
        auto out = detail::open_out(dir, "margins.csv");
        out << "r,lhs_gradient,lhs_h1,lhs_h1_source,rhs_flux,rhs_flux_source,"
               "margin_h1_source\n";
        for (size_t k = 0; k < h1s.rho.size(); ++k) {
            out << detail::fmt(h1s.rho[k]) << "," << detail::fmt(grad.lhs[k]) << ","
                << detail::fmt(h1.lhs[k]) << "," << detail::fmt(h1s.lhs[k]) << ","
                << detail::fmt(h1.rhs[k]) << "," << detail::fmt(h1s.rhs[k]) << ","
                << detail::fmt(h1s.margin[k]) << "\n";
        }
    }

    const double e0 = prof.E_at(cfg.rho0);
    const double b0 = prof.b_at(cfg.rho0);
    const double rmax = rho_max(cfg.rho0, e0, b0, cfg.m_const, p.dom->dim(),
                                cfg.c_const, default_tau_grid(cfg.tau_points));
    const double uinf = rep.norm.linf;
    const double cx_dom = 0.5 * (cfg.domain.axis[0].lo + cfg.domain.axis[0].hi);
    const double cy_dom = cfg.domain.dim == 2
        ? 0.5 * (cfg.domain.axis[1].lo + cfg.domain.axis[1].hi) : 0.0;
    const SupportReport sup = support_radius(
        *p.dom, rep.state.u,
        cfg.support_threshold_rel * (uinf > 0.0 ? uinf : 1.0), cx_dom, cy_dom);
    {
        auto out = detail::open_out(dir, "localization.csv");
        out << "key,value\n";
        out << "center_x," << detail::fmt(cfg.profile_x) << "\n";
        out << "center_y," << detail::fmt(cfg.profile_y) << "\n";
        out << "rho0," << detail::fmt(cfg.rho0) << "\n";
        out << "grad_energy_at_rho0," << detail::fmt(e0) << "\n";
        out << "boundary_energy_at_rho0," << detail::fmt(b0) << "\n";
        out << "m_const," << detail::fmt(cfg.m_const) << "\n";
        out << "c_const," << detail::fmt(cfg.c_const) << "\n";
        out << "rho_max," << detail::fmt(rmax) << "\n";
        out << "m_fit_gradient," << detail::fmt(grad.m_fit) << "\n";
        out << "m_fit_h1," << detail::fmt(h1.m_fit) << "\n";
        out << "m_fit_h1_source," << detail::fmt(h1s.m_fit) << "\n";
        out << "min_margin_h1_source," << detail::fmt(h1s.min_margin) << "\n";
        out << "support_radius," << detail::fmt(sup.radius) << "\n";
        out << "support_count," << sup.count << "\n";
        out << "support_threshold_rel," << detail::fmt(cfg.support_threshold_rel)
            << "\n";
    }
    return rep.converged ? RunStatus::ok : RunStatus::solver_failure;
}

/// sp: coupled alternation with the self-consistent potential.
inline RunStatus run_sp(const ExperimentConfig& cfg, const std::string& dir,
                        const std::string& preset = "") {
    write_manifest(dir, cfg, "sp", preset);
    const ProblemSpec p = cfg.problem();
    SpState s;
    try {
        s = solve_sp(p, cfg.e, cfg.solver, cfg.sp);
    } catch (const RegimeError& ex) {
        return detail::write_regime_failure(dir, ex);
    }
    {
        auto out = detail::open_out(dir, "sp_history.csv");
        out << "outer,du_rel,dphi_rel,phi_min,identity_rel\n";
        for (const auto& h : s.history) {
            out << h.k << "," << detail::fmt(h.du_rel) << ","
                << detail::fmt(h.dphi_rel) << "," << detail::fmt(h.phi_min) << ","
                << detail::fmt(h.identity_rel) << "\n";
        }
    }
    write_solve_report(dir, s.schro, cfg);
    if (s.schro.state.u.size())
        write_field(dir, *p.dom, s.schro.state.u, s.schro.section.U,
                    s.phi.size() ? &s.phi : nullptr);
    {
        auto out = detail::open_out(dir, "sp_report.csv");
        out << "key,value\n";
        out << "converged," << (s.converged ? 1 : 0) << "\n";
        out << "failure," << detail::sanitize(s.failure) << "\n";
        out << "e," << detail::fmt(s.e) << "\n";
        out << "outer_iters," << s.outer_iters << "\n";
        out << "identity_rel," << detail::fmt(s.identity_rel) << "\n";
        out << "phi_min," << detail::fmt(s.phi_min) << "\n";
        if (s.converged && s.schro.state.u.size())
            out << "bound_ratio," << detail::fmt(sp_bound_check(s, p)) << "\n";
    }
    return s.converged ? RunStatus::ok : RunStatus::solver_failure;
}

/// Standing-wave check: with u(t) = u0 * exp(i mu t) the residual of
///   i u_t + Lap u - lambda U - F exp(i mu t)
/// is a fixed field rotated by a unit phase, so its modulus cannot depend
/// on t. We evaluate the residual literally at each sample and report how
/// far the sup norms drift from the t = 0 value.
struct SolitonReport {
    std::vector<double> times;
    std::vector<double> residual_inf;   // per time sample
    std::vector<double> support_radius; // per time sample
    double residual_t0 = 0.0;
    double max_residual = 0.0;
    double max_drift = 0.0;         // max |residual(t) - residual(0)|
    double support_spread = 0.0;    // max |radius(t) - radius(0)|
};

inline SolitonReport soliton_check(const DiscreteDomain& dom, const VecC& u0,
                                   const VecC& section, Complex lambda, double mu,
                                   const VecC& F, const std::vector<double>& times) {
    const bool lam_ok = lambda == Complex{1.0, 0.0} || lambda == Complex{0.0, 1.0} ||
                        lambda == Complex{0.0, -1.0};
    if (!lam_ok)
        throw std::invalid_argument("soliton_check: lambda must be 1, i or -i");
    if (!(mu > 0.0))
        throw std::invalid_argument("soliton_check: mu must be positive");
    if (u0.size() != dom.size() || section.size() != dom.size() ||
        F.size() != dom.size())
        throw std::invalid_argument("soliton_check: field size mismatch");
    if (times.empty())
        throw std::invalid_argument("soliton_check: no time samples");

    SolitonReport out;
    out.times = times;
    const double uinf = u0.size() ? u0.cwiseAbs().maxCoeff() : 0.0;
    for (double t : times) {
        const Complex z = std::polar(1.0, mu * t);
        const VecC ut = u0 * z;
        const VecC Ut = section * z;
        const VecC Ft = F * z;
        // i * (i mu u) = -mu u; laplacian_apply returns -Lap.
        const VecC lap = dom.laplacian_apply(ut);
        double rinf = 0.0;
        for (long i = 0; i < dom.size(); ++i) {
            const Complex r = -mu * ut[i] - lap[i] - lambda * Ut[i] - Ft[i];
            rinf = std::max(rinf, std::abs(r));
        }
        out.residual_inf.push_back(rinf);
        const double thr = 1e-8 * (uinf > 0.0 ? uinf : 1.0);
        out.support_radius.push_back(support_radius(dom, ut, thr, 0.0, 0.0).radius);
    }
    out.residual_t0 = out.residual_inf.front();
    for (size_t k = 0; k < out.residual_inf.size(); ++k) {
        out.max_residual = std::max(out.max_residual, out.residual_inf[k]);
        out.max_drift = std::max(out.max_drift,
                                 std::abs(out.residual_inf[k] - out.residual_t0));
        out.support_spread =
            std::max(out.support_spread,
                     std::abs(out.support_radius[k] - out.support_radius.front()));
    }
    return out;
}

/// soliton: stationary solve with a = lambda, b = mu and right side -F,
/// then the standing-wave invariance check on time samples.
inline RunStatus run_soliton(const ExperimentConfig& cfg, const std::string& dir,
                             Complex lambda, double mu,
                             const std::vector<double>& times,
                             const std::string& preset = "") {
    ExperimentConfig stat = cfg;
    stat.a = lambda;
    stat.b = Complex{mu, 0.0};
    write_manifest(dir, stat, "soliton", preset);
    ProblemSpec p = stat.problem();
    const VecC F = p.F;
    p.F = -F;
    SolveReport rep;
    try {
        rep = solve_saturated(p, stat.solver);
    } catch (const RegimeError& ex) {
        return detail::write_regime_failure(dir, ex);
    }
    write_solve_report(dir, rep, stat);
    write_field(dir, *p.dom, rep.state.u, rep.section.U, nullptr);
    if (!rep.converged)
        return RunStatus::solver_failure;

    const SolitonReport sol =
        soliton_check(*p.dom, rep.state.u, rep.section.U, lambda, mu, F, times);
    auto out = detail::open_out(dir, "soliton.csv");
    out << "t,residual_inf,residual_drift,support_radius\n";
    for (size_t k = 0; k < sol.times.size(); ++k) {
        out << detail::fmt(sol.times[k]) << "," << detail::fmt(sol.residual_inf[k])
            << "," << detail::fmt(std::abs(sol.residual_inf[k] - sol.residual_t0))
            << "," << detail::fmt(sol.support_radius[k]) << "\n";
    }
    return RunStatus::ok;
}

/// scan: admissibility booleans over a rectangle of b values for fixed a.
struct ScanGrid {
    Complex a{1.0, 0.0};
    double re_lo = -3.0, re_hi = 3.0;
    double im_lo = -3.0, im_hi = 3.0;
    int nre = 41, nim = 41;
    double f_inf = 0.0;
};

inline RunStatus run_scan(const ScanGrid& grid, const std::string& dir) {
    if (grid.nre < 2 || grid.nim < 2)
        throw std::invalid_argument("scan: need at least a 2x2 grid");
    auto out = detail::open_out(dir, "scan.csv");
    out << "a_re,a_im,b_re,b_im,existence,uniqueness,null_possible\n";
    const PotentialSummary none = PotentialSummary::zero();
    for (int j = 0; j < grid.nim; ++j) {
        const double bi =
            grid.im_lo + (grid.im_hi - grid.im_lo) * j / double(grid.nim - 1);
        for (int i = 0; i < grid.nre; ++i) {
            const double br =
                grid.re_lo + (grid.re_hi - grid.re_lo) * i / double(grid.nre - 1);
            const RegimeReport rr =
                classify(grid.a, Complex{br, bi}, none, grid.f_inf);
            out << detail::fmt(grid.a.real()) << "," << detail::fmt(grid.a.imag())
                << "," << detail::fmt(br) << "," << detail::fmt(bi) << ","
                << (rr.existence_ok ? 1 : 0) << "," << (rr.uniqueness_ok ? 1 : 0)
                << "," << (rr.null_solution_possible ? 1 : 0) << "\n";
        }
    }
    return RunStatus::ok;
}

} // namespace satnls

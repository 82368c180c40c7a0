#include <catch2/catch_amalgamated.hpp>

#include <random>

#include <satnls/solver.hpp>

using namespace satnls;

namespace {

ProblemSpec box_problem(int cells, double amp = 5.0, double halfwidth = 0.5,
                        double extent = 2.0) {
    ProblemSpec p;
    p.dom = build_interval(-extent, extent, cells, Boundary::dirichlet);
    p.a = {1.0, 0.0};
    p.b = {1.0, 0.0};
    p.F.resize(p.dom->size());
    for (long i = 0; i < p.dom->size(); ++i)
        p.F[i] = std::abs(p.dom->x_of(i)) < halfwidth ? Complex{amp, 0.0}
                                                      : Complex{0.0, 0.0};
    return p;
}

VecC random_complex(long n, unsigned seed, double lo, double hi) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> mod(lo, hi);
    std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI);
    VecC u(n);
    for (long i = 0; i < n; ++i) u[i] = std::polar(mod(rng), ang(rng));
    return u;
}

} // namespace

TEST_CASE("energy identities hold exactly on manufactured solutions") {
    const auto dom = build_interval(-1.0, 1.0, 32, Boundary::dirichlet);
    const VecC u = random_complex(dom->size(), 5, 0.5, 2.0);  // bounded away from 0
    const VecC phi = random_complex(dom->size(), 6, 0.0, 0.5);
    const Complex a{0.8, -0.3}, b{1.2, 0.7};
    VecC U(dom->size());
    VecC F = dom->laplacian_apply(u);
    for (long i = 0; i < dom->size(); ++i) {
        U[i] = u[i] / std::abs(u[i]);
        F[i] += a * U[i] + b * u[i] + phi[i] * u[i];
    }
    const IdentityReport r = energy_identities(*dom, u, U, a, b, phi, F);
    CHECK(r.real_rel <= 1e-13);
    CHECK(r.imag_rel <= 1e-13);
    CHECK(r.l1 == Catch::Approx(u.cwiseAbs().dot(dom->weights())).epsilon(1e-12));
    // for an exact pair the section pairing collapses to the L1 mass
    CHECK(r.sat_pair.real() == Catch::Approx(r.l1).epsilon(1e-12));
    CHECK(std::abs(r.sat_pair.imag()) <= 1e-12 * r.l1);
    VecC bad(3);
    CHECK_THROWS_AS(energy_identities(*dom, u, bad, a, b, phi, F),
                    std::invalid_argument);
}

TEST_CASE("graph-distance residual vanishes on manufactured solutions") {
    const auto dom = build_interval(-1.0, 1.0, 32, Boundary::dirichlet);
    const Complex a{1.0, 0.5}, b{0.9, 0.0};

    SECTION("supported solution, exact sign term") {
        const VecC u = random_complex(dom->size(), 7, 0.5, 2.0);
        VecC U(dom->size());
        VecC F = dom->laplacian_apply(u);
        for (long i = 0; i < dom->size(); ++i) {
            U[i] = u[i] / std::abs(u[i]);
            F[i] += a * U[i] + b * u[i];
        }
        const ResidualReport r =
            inclusion_residual(*dom, u, U, a, b, VecC{}, F, 2.0);
        CHECK(r.inclusion_inf <= 1e-12);
        CHECK(r.section_inf <= 1e-12);
    }
    SECTION("null solution with a small source") {
        const VecC u = VecC::Zero(dom->size());
        const VecC F = random_complex(dom->size(), 8, 0.0, std::abs(a));
        VecC U(dom->size());
        for (long i = 0; i < dom->size(); ++i) U[i] = F[i] / a;
        const ResidualReport r =
            inclusion_residual(*dom, u, U, a, b, VecC{}, F, 1.0);
        CHECK(r.inclusion_inf == 0.0);
        CHECK(r.section_inf <= 1e-14);
    }
    SECTION("zero field cannot absorb a large source") {
        const VecC u = VecC::Zero(dom->size());
        VecC F = VecC::Constant(dom->size(), Complex{3.0, 0.0});
        VecC U = VecC::Constant(dom->size(), Complex{1.0, 0.0});
        const ResidualReport r =
            inclusion_residual(*dom, u, U, a, b, VecC{}, F, 1.0);
        // |r_lin| - |a| = 3 - |a| at every node
        CHECK(r.inclusion_inf == Catch::Approx(3.0 - std::abs(a)).epsilon(1e-12));
    }
}

TEST_CASE("zero source gives the zero solution immediately") {
    ProblemSpec p = box_problem(32, 0.0);
    const SolveReport rep = solve_saturated(p);
    CHECK(rep.converged);
    CHECK(rep.norm.h1 == 0.0);
    CHECK(rep.residual_inf == 0.0);
    CHECK(rep.support_count == 0);
    CHECK(rep.apriori_ratio == 0.0);
}

TEST_CASE("small constant source lands in the null regime") {
    ProblemSpec p;
    p.dom = build_interval(-1.0, 1.0, 64, Boundary::dirichlet);
    p.a = {1.0, 0.0};
    p.b = {1.0, 0.0};
    p.F = VecC::Constant(p.dom->size(), Complex{0.01, 0.0});
    const SolveReport rep = solve_saturated(p);
    CHECK(rep.converged);
    CHECK(rep.norm.h1 <= 1e-5);
    CHECK(rep.support_count == 0);
    for (long i = 0; i < rep.section.U.size(); ++i)
        CHECK(std::abs(rep.section.U[i] - Complex{0.01, 0.0}) <= 1e-6);
    CHECK(rep.section.clipped == 0);
    CHECK(rep.residual_inf <= 1e-4);
    CHECK(rep.identity.real_rel <= 1e-6);
    CHECK(rep.identity.imag_rel <= 1e-6);
}

TEST_CASE("neumann problems need a positive shift and then behave") {
    ProblemSpec p;
    p.dom = build_interval(0.0, 1.0, 32, Boundary::neumann);
    p.a = {1.0, 0.0};
    p.b = {1.0, 0.0};
    p.F = VecC::Constant(p.dom->size(), Complex{0.05, 0.0});
    SolverOptions opts;
    opts.delta = 0.0;
    CHECK_THROWS_AS(solve_saturated(p, opts), std::invalid_argument);
    const SolveReport rep = solve_saturated(p);  // default shift kicks in
    CHECK(rep.converged);
    CHECK(rep.delta > 0.0);
    CHECK(rep.norm.h1 <= 1e-5);
    for (long i = 0; i < rep.section.U.size(); ++i)
        CHECK(std::abs(rep.section.U[i] - Complex{0.05, 0.0}) <= 1e-6);
}

TEST_CASE("input validation") {
    ProblemSpec p;
    CHECK_THROWS_AS(solve_saturated(p), std::invalid_argument);  // no domain
    p = box_problem(16);
    ProblemSpec bad = p;
    bad.F.resize(3);
    CHECK_THROWS_AS(solve_saturated(bad), std::invalid_argument);
    bad = p;
    bad.phi = VecC::Zero(2);
    CHECK_THROWS_AS(solve_saturated(bad), std::invalid_argument);
    SolverOptions opts;
    opts.n_start = 0.5;
    CHECK_THROWS_AS(solve_saturated(p, opts), std::invalid_argument);
    opts = {};
    opts.n_max = 0.5;
    CHECK_THROWS_AS(solve_saturated(p, opts), std::invalid_argument);
    VecC u0 = VecC::Zero(2);
    CHECK_THROWS_AS(solve_saturated(p, {}, &u0), std::invalid_argument);
}

TEST_CASE("inadmissible coefficients raise a regime error with the reasons") {
    ProblemSpec p = box_problem(16);
    p.a = {-1.0, 0.0};  // on the excluded half-line
    try {
        solve_saturated(p);
        FAIL("expected RegimeError");
    } catch (const RegimeError& e) {
        CHECK_FALSE(e.report.existence_ok);
        CHECK(std::string(e.what()).find("a_in_admissible_set") != std::string::npos);
    }
}

TEST_CASE("solutions rotate with the phase of the source") {
    ProblemSpec p = box_problem(64, 2.0);
    const SolveReport r1 = solve_saturated(p);
    REQUIRE(r1.converged);
    const Complex phase = std::polar(1.0, 0.7);
    ProblemSpec p2 = p;
    p2.F = p.F * phase;
    const SolveReport r2 = solve_saturated(p2);
    REQUIRE(r2.converged);
    const double diff =
        norms(*p.dom, (r2.state.u - phase * r1.state.u).eval()).h1;
    CHECK(diff <= 1e-6 * (1.0 + r1.norm.h1));
}

TEST_CASE("stage solutions do not depend on the resolvent shift") {
    ProblemSpec p = box_problem(64, 3.0);
    SolverOptions o1, o2;
    o1.delta = 0.0;
    o2.delta = 0.7;
    SECTION("single level above sup|u|") {
        const SolveReport r1 = solve_regularized(p, 8.0, o1);
        const SolveReport r2 = solve_regularized(p, 8.0, o2);
        REQUIRE(r1.converged);
        REQUIRE(r2.converged);
        REQUIRE(r1.norm.linf < 8.0);  // precondition for shift cancellation
        const double diff = norms(*p.dom, (r2.state.u - r1.state.u).eval()).h1;
        CHECK(diff <= 1e-8 * (1.0 + r1.norm.h1));
    }
    SECTION("full continuation") {
        const SolveReport r1 = solve_saturated(p, o1);
        const SolveReport r2 = solve_saturated(p, o2);
        REQUIRE(r1.converged);
        REQUIRE(r2.converged);
        const double diff = norms(*p.dom, (r2.state.u - r1.state.u).eval()).h1;
        CHECK(diff <= 1e-6 * (1.0 + r1.norm.h1));
    }
}

TEST_CASE("single-level solve satisfies the regularized equation literally") {
    ProblemSpec p = box_problem(64, 3.0);
    const double n = 16.0;
    const SolveReport rep = solve_regularized(p, n);
    REQUIRE(rep.converged);
    CHECK(rep.n_final == n);
    CHECK(rep.stages.size() == 1);
    REQUIRE(rep.norm.linf < n);
    VecC res = p.dom->laplacian_apply(rep.state.u);
    res += saturated_forcing(rep.state.u, p.a, p.b, p.phi, 0.0, n);
    res -= p.F;
    CHECK(res.cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(rep.stages[0].map_gap <= 1e-9);
}

TEST_CASE("a priori bound: H1 norm at most the dual norm when min(1, Re b) = 1") {
    ProblemSpec p = box_problem(64);
    const SolveReport rep = solve_saturated(p);
    REQUIRE(rep.converged);
    CHECK(rep.apriori_ratio <= 1.0 + 1e-9);
}

TEST_CASE("energy identities on a complex-coefficient solve") {
    ProblemSpec p;
    p.dom = build_interval(-2.0, 2.0, 64, Boundary::dirichlet);
    p.a = {1.0, 1.0};
    p.b = {1.0, 2.0};  // imaginary parts aligned: existence holds
    p.phi = VecC::Constant(p.dom->size(), Complex{0.3, 0.1});
    p.F.resize(p.dom->size());
    for (long i = 0; i < p.dom->size(); ++i) {
        const double x = p.dom->x_of(i);
        p.F[i] = Complex{3.0 * std::exp(-x * x), 1.0 * std::cos(x)};
    }
    // with complex coefficients the phase winds and |u| has an interior zero
    // (near x = -1.69 here), so successive levels keep differing on a set of
    // measure ~ 1/n and the stage gap only decays like 1/sqrt(n); run with a
    // continuation tolerance matched to that and room for the slower inner
    // iteration
    SolverOptions o;
    o.tol_cont = 1e-4;
    o.max_inner = 2000;
    const SolveReport rep = solve_saturated(p, o);
    REQUIRE(rep.converged);
    CHECK(rep.identity.real_rel <= 1e-5);
    CHECK(rep.identity.imag_rel <= 1e-5);
    CHECK(rep.section.clipped == 0);
}

TEST_CASE("damped sweep matches lagged at a low level and dies at a high one") {
    ProblemSpec p = box_problem(64, 3.0);
    SolverOptions damped;
    damped.method = InnerMethod::damped;
    damped.max_inner = 2000;

    const SolveReport lo_d = solve_regularized(p, 4.0, damped);
    const SolveReport lo_l = solve_regularized(p, 4.0);
    REQUIRE(lo_d.converged);
    REQUIRE(lo_l.converged);
    const double diff = norms(*p.dom, (lo_d.state.u - lo_l.state.u).eval()).h1;
    CHECK(diff <= 1e-7 * (1.0 + lo_l.norm.h1));

    // the fixed-point map is not a contraction once n (|a| n + |b|) outruns
    // the resolvent; theta-halving only buys a bounded factor
    SolverOptions hi = damped;
    hi.max_inner = 400;
    const SolveReport hi_d = solve_regularized(p, 1048576.0, hi);
    CHECK_FALSE(hi_d.converged);
    CHECK_FALSE(hi_d.failure.empty());
}

TEST_CASE("uniqueness probe returns to the same solution") {
    ProblemSpec p = box_problem(48, 2.0);
    const UniquenessProbe probe = uniqueness_probe(p, {}, 99);
    CHECK(probe.from_zero.converged);
    CHECK(probe.perturbed.converged);
    CHECK(probe.diff_rel <= 1e-6);
}

TEST_CASE("uniqueness probe refuses coefficients outside its regime") {
    ProblemSpec p = box_problem(16);
    p.a = {2.0, 0.0};
    p.b = {-0.5, 0.5};  // existence fine, damping term negative
    CHECK(existence_admissible(p.a, p.b));
    CHECK_FALSE(uniqueness_admissible(p.a, p.b));
    CHECK_THROWS_AS(uniqueness_probe(p), RegimeError);
}

TEST_CASE("potential summary covers complex fields") {
    VecC phi(3);
    phi << Complex{1.0, -2.0}, Complex{-0.5, 0.0}, Complex{0.25, 3.0};
    const PotentialSummary s = summarize(phi);
    CHECK(s.re_min == -0.5);
    CHECK(s.re_max == 1.0);
    CHECK(s.im_min == -2.0);
    CHECK(s.im_max == 3.0);
    CHECK_FALSE(s.exact);
    CHECK(summarize(VecC{}).is_zero());
}

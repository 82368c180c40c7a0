#include <catch2/catch_amalgamated.hpp>

#include <random>

#include <satnls/poisson.hpp>

using namespace satnls;

TEST_CASE("unit-modulus source on (0,1): nodal values are x(1-x)/2") {
    const auto dom = build_interval(0.0, 1.0, 128, Boundary::dirichlet);
    VecC u(dom->size());
    for (long i = 0; i < dom->size(); ++i)
        u[i] = std::polar(1.0, 3.0 * dom->x_of(i));  // |u| = 1, phase irrelevant
    const VecR phi = solve_poisson(*dom, u, 2.0);
    // load is identically 1, and the second difference of a quadratic is
    // exact, so phi must hit x(1-x)/2 at the nodes up to solver roundoff
    for (long i = 0; i < dom->size(); ++i) {
        const double x = dom->x_of(i);
        CHECK(phi[i] == Catch::Approx(0.5 * x * (1.0 - x)).margin(1e-12));
    }
    CHECK(phi.maxCoeff() == Catch::Approx(0.125).margin(1e-12));

    CHECK(sp_identity_residual(*dom, phi, u, 2.0) <= 1e-12);
    // scaling phi by 1.1 scales the two sides differently: 0.11/1.21
    const VecR off = 1.1 * phi;
    CHECK(sp_identity_residual(*dom, off, u, 2.0) ==
          Catch::Approx(0.11 / 1.21).margin(1e-9));
}

TEST_CASE("poisson leg validates its inputs") {
    const auto neu = build_interval(0.0, 1.0, 32, Boundary::neumann);
    const auto dir = build_interval(0.0, 1.0, 32, Boundary::dirichlet);
    const VecC u = VecC::Constant(dir->size(), Complex{1.0, 0.0});
    CHECK_THROWS_AS(solve_poisson(*neu, VecC::Constant(neu->size(), Complex{1.0, 0.0}), 1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(solve_poisson(*dir, u, -1.0), std::invalid_argument);
    VecC small(3);
    CHECK_THROWS_AS(solve_poisson(*dir, small, 1.0), std::invalid_argument);
    VecR phi = VecR::Zero(dir->size());
    CHECK_THROWS_AS(sp_identity_residual(*dir, phi, small, 1.0), std::invalid_argument);
}

TEST_CASE("potential stays nonnegative for arbitrary sources") {
    const auto dom = build_rectangle(-1.0, 1.0, 24, -1.0, 1.0, 24, Boundary::dirichlet);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> amp(0.0, 3.0);
    VecC u(dom->size());
    for (long i = 0; i < dom->size(); ++i) u[i] = Complex{amp(rng), amp(rng)};
    const VecR phi = solve_poisson(*dom, u, 0.7);
    CHECK(phi.minCoeff() >= -1e-10 * phi.maxCoeff());
    CHECK(phi.maxCoeff() > 0.0);
    CHECK(sp_identity_residual(*dom, phi, u, 0.7) <= 1e-12);
}

namespace {

ProblemSpec coupled_problem(const std::shared_ptr<const DiscreteDomain>& dom) {
    ProblemSpec p;
    p.dom = dom;
    p.a = Complex{1.0, 0.0};
    p.b = Complex{1.0, 0.0};
    // amplitude well above |a| so the solve sits squarely in the supported
    // regime; right at |F| = |a| the continuation approaches the null
    // solution only like 1/sqrt(n) and is not worth the wait
    p.F = VecC::Zero(dom->size());
    for (long i = 0; i < dom->size(); ++i)
        if (std::abs(dom->x_of(i)) < 0.5 && std::abs(dom->y_of(i)) < 0.5)
            p.F[i] = Complex{5.0, 0.0};
    return p;
}

} // namespace

TEST_CASE("alternating coupled solve converges and keeps the exact identity") {
    const auto dom = build_rectangle(-2.0, 2.0, 32, -2.0, 2.0, 32, Boundary::dirichlet);
    const ProblemSpec p = coupled_problem(dom);
    SpOptions sp;
    sp.tol_sp = 1e-9;
    const SpState s = solve_sp(p, 1.0, {}, sp);
    REQUIRE(s.converged);
    REQUIRE(s.schro.converged);
    CHECK(s.outer_iters >= 2);
    CHECK(s.history.size() == static_cast<size_t>(s.outer_iters));
    CHECK(s.history.back().du_rel <= sp.tol_sp);
    CHECK(s.history.back().dphi_rel <= sp.tol_sp);
    // the discrete energy identity holds after every Poisson solve
    for (const auto& tr : s.history) CHECK(tr.identity_rel <= 1e-10);
    CHECK(s.identity_rel <= 1e-10);
    // discrete maximum principle: no materially negative potential ever
    CHECK(s.phi_min >= -1e-10 * std::max(s.phi.maxCoeff(), 1e-300));
    CHECK(s.phi.maxCoeff() > 0.0);

    const double ratio = sp_bound_check(s, p);
    CHECK(ratio > 0.0);
    CHECK(std::isfinite(ratio));
}

TEST_CASE("zero coupling reduces to the plain solve") {
    const auto dom = build_rectangle(-2.0, 2.0, 24, -2.0, 2.0, 24, Boundary::dirichlet);
    const ProblemSpec p = coupled_problem(dom);
    const SpState s = solve_sp(p, 0.0);
    REQUIRE(s.converged);
    CHECK(s.phi.cwiseAbs().maxCoeff() == 0.0);
    const SolveReport plain = solve_saturated(p);
    REQUIRE(plain.converged);
    const double diff = norms(*dom, (s.schro.state.u - plain.state.u).eval()).h1;
    CHECK(diff <= 1e-6 * (1.0 + plain.norm.h1));
}

TEST_CASE("coupled solve input validation") {
    const auto dom = build_rectangle(-2.0, 2.0, 16, -2.0, 2.0, 16, Boundary::dirichlet);
    ProblemSpec p = coupled_problem(dom);
    CHECK_THROWS_AS(solve_sp(p, -1.0), std::invalid_argument);
    SpOptions bad;
    bad.max_outer = 0;
    CHECK_THROWS_AS(solve_sp(p, 1.0, {}, bad), std::invalid_argument);
    p.phi = VecC::Zero(dom->size());
    CHECK_THROWS_AS(solve_sp(p, 1.0), std::invalid_argument);

    const auto neu = build_rectangle(-2.0, 2.0, 16, -2.0, 2.0, 16, Boundary::neumann);
    ProblemSpec pn = coupled_problem(dom);
    pn.dom = neu;
    pn.F = VecC::Zero(neu->size());
    CHECK_THROWS_AS(solve_sp(pn, 1.0), std::invalid_argument);
}

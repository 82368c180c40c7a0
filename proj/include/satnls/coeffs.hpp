/**
 * @file coeffs.hpp
 * @brief Admissibility checks for the coefficient pair (a, b) of
 *        -Laplace(u) + a*U + b*u + phi*u = F and regime classification.
 *
 * The checks are in terms of the set A = C \ { z : Re(z) <= 0 and Im(z) = 0 },
 * i.e. the complex plane minus the closed negative real half-line.
 */

#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace satnls {

using Complex = std::complex<double>;

/// True iff z is outside the closed non-positive real half-line.
/// Exact comparisons on purpose: the boundary belongs to the excluded set.
inline bool in_A(Complex z) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
        throw std::invalid_argument("in_A: non-finite input");
    return !(z.real() <= 0.0 && z.imag() == 0.0);
}

/// Interval bounds for a (possibly complex-valued) potential. The default
/// summary describes phi identically zero. `exact` means the bounds are tight
/// (constant potential); otherwise the derived predicates are sufficient
/// conditions only.
struct PotentialSummary {
    double re_min = 0.0, re_max = 0.0;
    double im_min = 0.0, im_max = 0.0;
    bool exact = true;

    static PotentialSummary zero() { return {}; }

    static PotentialSummary constant(Complex c) {
        return {c.real(), c.real(), c.imag(), c.imag(), true};
    }

    /// Bounds of a sampled real potential. Empty fields are treated as zero.
    template <class Vec>
    static PotentialSummary from_real_field(const Vec& phi) {
        if (phi.size() == 0) return zero();
        double lo = phi[0], hi = phi[0];
        for (long i = 1; i < static_cast<long>(phi.size()); ++i) {
            lo = std::min(lo, double(phi[i]));
            hi = std::max(hi, double(phi[i]));
        }
        // bounds of a grid sample are not the essential range unless constant
        return {lo, hi, 0.0, 0.0, lo == hi};
    }

    bool is_zero() const {
        return re_min == 0.0 && re_max == 0.0 && im_min == 0.0 && im_max == 0.0;
    }
};

namespace detail {

// inf over the box [re_min,re_max] x [im_min,im_max] of Re(a * conj(z))
//   Re(a conj z) = Re(a) Re(z) + Im(a) Im(z)
inline double inf_re_a_conj(Complex a, const PotentialSummary& s) {
    double v = a.real() * (a.real() >= 0.0 ? s.re_min : s.re_max);
    v += a.imag() * (a.imag() >= 0.0 ? s.im_min : s.im_max);
    return v;
}

} // namespace detail

/// Solvability condition on the pair (a, b): both in A, and either the
/// imaginary parts do not oppose each other, or b lies strictly above the
/// dividing line Re(b) = (Im(b)/Im(a)) * Re(a).
inline bool existence_admissible(Complex a, Complex b) {
    if (!in_A(a) || !in_A(b)) return false;
    const double prod = a.imag() * b.imag();
    if (prod >= 0.0) return true;
    return b.real() > (b.imag() / a.imag()) * a.real();
}

/// Sufficient condition for uniqueness of the solution, with the potential
/// described by interval bounds. With phi = 0 this reduces to
/// a != 0, Re(a) >= 0, Re(a*conj(b)) >= 0 and b in A.
inline bool uniqueness_admissible(Complex a, Complex b,
                                  const PotentialSummary& phi = PotentialSummary::zero()) {
    if (!(std::isfinite(a.real()) && std::isfinite(a.imag()) &&
          std::isfinite(b.real()) && std::isfinite(b.imag())))
        throw std::invalid_argument("uniqueness_admissible: non-finite input");
    if (a == Complex(0.0, 0.0)) return false;
    if (a.real() < 0.0) return false;
    const double base = std::real(a * std::conj(b)) + detail::inf_re_a_conj(a, phi);
    if (base < 0.0) return false;
    if (base > 0.0) return true;
    // the combined damping term may vanish somewhere; require one strict sign
    if (b.real() + phi.re_min > 0.0) return true;
    if (b.imag() + phi.im_min > 0.0) return true;
    if (b.imag() + phi.im_max < 0.0) return true;
    return false;
}

/// One named inequality together with its outcome.
struct Reason {
    std::string name;
    bool ok = false;
};

struct RegimeReport {
    bool existence_ok = false;
    bool uniqueness_ok = false;
    bool null_solution_possible = false;
    std::vector<Reason> reasons;

    bool reason(const std::string& name) const {
        for (const auto& r : reasons)
            if (r.name == name) return r.ok;
        throw std::invalid_argument("RegimeReport: unknown reason '" + name + "'");
    }
};

/// Evaluate every admissibility inequality for (a, b, phi) and, when a bound
/// on ||F||_inf is supplied, whether the zero-field solution (u = 0 with
/// section F/a) is available.
inline RegimeReport classify(Complex a, Complex b,
                             const PotentialSummary& phi = PotentialSummary::zero(),
                             std::optional<double> f_inf_bound = std::nullopt) {
    RegimeReport rep;
    const bool a_in = in_A(a), b_in = in_A(b);
    const double prod = a.imag() * b.imag();
    const bool same_sign = prod >= 0.0;
    const bool halfplane = prod < 0.0 && b.real() > (b.imag() / a.imag()) * a.real();
    rep.reasons.push_back({"a_in_admissible_set", a_in});
    rep.reasons.push_back({"b_in_admissible_set", b_in});
    rep.reasons.push_back({"imag_parts_not_opposed", same_sign});
    rep.reasons.push_back({"b_above_dividing_line", halfplane});
    rep.existence_ok = a_in && b_in && (same_sign || halfplane);

    const bool a_nonzero = a != Complex(0.0, 0.0);
    const bool re_a_nonneg = a.real() >= 0.0;
    const double base = std::real(a * std::conj(b)) + detail::inf_re_a_conj(a, phi);
    const bool damping_nonneg = base >= 0.0;
    const bool strict = base > 0.0 || (b.real() + phi.re_min > 0.0) ||
                        (b.imag() + phi.im_min > 0.0) || (b.imag() + phi.im_max < 0.0);
    rep.reasons.push_back({"a_nonzero", a_nonzero});
    rep.reasons.push_back({"re_a_nonneg", re_a_nonneg});
    rep.reasons.push_back({"damping_term_nonneg", damping_nonneg});
    rep.reasons.push_back({"strict_sign_when_damping_vanishes", strict});
    rep.uniqueness_ok = a_nonzero && re_a_nonneg && damping_nonneg && strict;

    if (f_inf_bound) {
        if (!(*f_inf_bound >= 0.0))
            throw std::invalid_argument("classify: negative ||F||_inf bound");
        const bool small = *f_inf_bound <= std::abs(a);
        rep.reasons.push_back({"f_inf_at_most_abs_a", small});
        rep.null_solution_possible = rep.existence_ok && small;
    }
    return rep;
}

} // namespace satnls

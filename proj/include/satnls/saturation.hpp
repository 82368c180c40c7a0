/**
 * @file saturation.hpp
 * @brief Pointwise regularizations of the sign map z -> z/|z| and the
 *        radial clamp onto the disk of radius n, plus the combined forcing
 *        term used by the continuation solver and section extraction.
 *
 * Both maps are written multiplicatively, value = factor(|z|) * z, so the
 * vector code never divides by |z| and z = 0 is handled without branches on
 * the caller side. sign_factor and clamp_factor are the scalar profiles.
 */

#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

#include "domain.hpp"

namespace satnls {

/// Multiplicative profile of the regularized sign map at radius s >= 0:
/// 1 / (s (1 - 1/n^2) + 1/n) for s <= n and 1/s beyond. Continuous across
/// s = n with value 1/n; at s = 0 the value is n, so the map vanishes
/// linearly at the origin with slope n.
inline double sign_factor(double s, double n) {
    if (!(n >= 1.0))
        throw std::invalid_argument("sign_factor: level must be >= 1");
    if (s < 0.0 || !std::isfinite(s))
        throw std::invalid_argument("sign_factor: radius must be finite and >= 0");
    if (s <= n)
        return 1.0 / (s * (1.0 - 1.0 / (n * n)) + 1.0 / n);
    return 1.0 / s;
}

/// Multiplicative profile of the radial clamp: min(1, n/s), with value 1 at
/// s = 0. Identity inside the disk of radius n, projection beyond it.
inline double clamp_factor(double s, double n) {
    if (!(n >= 1.0))
        throw std::invalid_argument("clamp_factor: level must be >= 1");
    if (s < 0.0 || !std::isfinite(s))
        throw std::invalid_argument("clamp_factor: radius must be finite and >= 0");
    return s <= n ? 1.0 : n / s;
}

/// Regularized sign map at level n. Equals z/|z| for |z| >= n and bends
/// smoothly to 0 at the origin; at level 1 it is the identity on the closed
/// unit disk.
inline Complex regularized_sign(Complex z, double n) {
    return sign_factor(std::abs(z), n) * z;
}

/// Radial clamp onto the closed disk of radius n.
inline Complex radial_clamp(Complex z, double n) {
    return clamp_factor(std::abs(z), n) * z;
}

/// Pointwise multiplier c(s) with f(z) = c(|z|) z for the combined forcing
/// a g_n(z) + (b - delta + phi) h_n(z). Exposed separately because the
/// lagged-coefficient linear solves need the multiplier, not the value.
inline Complex forcing_multiplier(double s, Complex a, Complex b_eff, double n) {
    return a * sign_factor(s, n) + b_eff * clamp_factor(s, n);
}

/// Combined forcing f_n(u) = a g_n(u) + (b - delta + phi) h_n(u), applied
/// pointwise. phi may be empty (treated as 0) and must match u in size
/// otherwise.
inline VecC saturated_forcing(const VecC& u, Complex a, Complex b, const VecC& phi,
                              double delta, double n) {
    if (phi.size() != 0 && phi.size() != u.size())
        throw std::invalid_argument("saturated_forcing: potential size mismatch");
    VecC out(u.size());
    const Complex bd = b - delta;
    for (long i = 0; i < u.size(); ++i) {
        const Complex beff = bd + (phi.size() ? phi[i] : Complex{0.0, 0.0});
        out[i] = forcing_multiplier(std::abs(u[i]), a, beff, n) * u[i];
    }
    return out;
}

/// A section of the saturated graph attached to a solution: U = u/|u| where
/// |u| is above the support threshold, U = F/a elsewhere. Values of F/a that
/// leave the closed unit disk are radially clipped and counted; a nonzero
/// clip count means u = 0 was accepted where no admissible section exists.
struct SectionReport {
    VecC U;
    long clipped = 0;          // off-support nodes where |F/a| > 1 (clipped)
    double max_overshoot = 0;  // max(|F/a| - 1, 0) over off-support nodes
    double threshold = 0;      // |u| cutoff that defined the support
};

inline SectionReport extract_section(const VecC& u, const VecC& F, Complex a,
                                     double threshold) {
    if (F.size() != u.size())
        throw std::invalid_argument("extract_section: source size mismatch");
    if (a == Complex{0.0, 0.0})
        throw std::invalid_argument("extract_section: a must be nonzero");
    if (!(threshold >= 0.0))
        throw std::invalid_argument("extract_section: negative threshold");
    SectionReport r;
    r.threshold = threshold;
    r.U.resize(u.size());
    for (long i = 0; i < u.size(); ++i) {
        const double s = std::abs(u[i]);
        if (s > threshold) {
            r.U[i] = u[i] / s;
        } else {
            Complex v = F[i] / a;
            const double m = std::abs(v);
            if (m > 1.0) {
                ++r.clipped;
                r.max_overshoot = std::max(r.max_overshoot, m - 1.0);
                v /= m;
            }
            r.U[i] = v;
        }
    }
    return r;
}

/// How far U is from being a section of the saturated graph for u:
/// sup |U| - 1 (positive means the unit bound is violated) and the largest
/// deviation |U - u/|u|| over the support {|u| > threshold}.
struct SectionCheck {
    double sup_excess = 0.0;
    double sign_deviation = 0.0;
};

inline SectionCheck validate_section(const VecC& u, const VecC& U, double threshold) {
    if (U.size() != u.size())
        throw std::invalid_argument("validate_section: size mismatch");
    SectionCheck c;
    for (long i = 0; i < u.size(); ++i) {
        c.sup_excess = std::max(c.sup_excess, std::abs(U[i]) - 1.0);
        const double s = std::abs(u[i]);
        if (s > threshold)
            c.sign_deviation = std::max(c.sign_deviation, std::abs(U[i] - u[i] / s));
    }
    return c;
}

} // namespace satnls

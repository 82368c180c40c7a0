/**
 * @file domain.hpp
 * @brief Uniform tensor grids on rectangles with Dirichlet or Neumann
 *        boundaries: quadrature weights, stiffness matrix, shifted solves,
 *        norms, the discrete dual norm and ball/shell masks.
 *
 * Unknowns are interior nodes for Dirichlet (boundary values are 0) and all
 * nodes for Neumann (mirrored-ghost stencil). The stiffness matrix K is
 * assembled edge by edge so that <-Laplace_h u, v>_w equals the edge sum
 * sum_e m_e (du/h)(conj dv/h) identically; the quadrature is the tensor
 * trapezoid rule, stored as the diagonal weight vector w.
 */

#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "coeffs.hpp"

namespace satnls {

using SpMat = Eigen::SparseMatrix<double>;
using SpMatC = Eigen::SparseMatrix<std::complex<double>>;
using VecC = Eigen::VectorXcd;
using VecR = Eigen::VectorXd;

enum class Boundary { dirichlet, neumann };

struct GridAxis {
    double lo = 0.0, hi = 1.0;
    int cells = 0;
    double h() const { return (hi - lo) / cells; }
};

struct DomainSpec {
    int dim = 1;
    Boundary bc = Boundary::dirichlet;
    std::array<GridAxis, 2> axis{};  // axis[1] ignored in 1D
};

class DiscreteDomain {
public:
    explicit DiscreteDomain(const DomainSpec& spec) : spec_(spec) {
        if (spec.dim != 1 && spec.dim != 2)
            throw std::invalid_argument("DiscreteDomain: dim must be 1 or 2");
        for (int d = 0; d < spec.dim; ++d) {
            const auto& ax = spec.axis[d];
            if (!(ax.hi > ax.lo))
                throw std::invalid_argument("DiscreteDomain: empty axis extent");
            if (ax.cells < 2)
                throw std::invalid_argument("DiscreteDomain: need at least 3 nodes per axis");
        }
        nu_[0] = axis_unknowns(0);
        nu_[1] = spec.dim == 2 ? axis_unknowns(1) : 1;
        n_ = nu_[0] * nu_[1];
        build_weights();
        build_stiffness();
    }

    int dim() const { return spec_.dim; }
    Boundary bc() const { return spec_.bc; }
    const DomainSpec& spec() const { return spec_; }
    long size() const { return n_; }
    int nx() const { return nu_[0]; }
    int ny() const { return nu_[1]; }
    double h(int axis) const { return spec_.axis[axis].h(); }
    double h_min() const { return spec_.dim == 2 ? std::min(h(0), h(1)) : h(0); }

    long index(int ix, int iy) const { return ix + static_cast<long>(nu_[0]) * iy; }
    int ix_of(long i) const { return static_cast<int>(i % nu_[0]); }
    int iy_of(long i) const { return static_cast<int>(i / nu_[0]); }

    double x_of(long i) const { return axis_coord(0, ix_of(i)); }
    double y_of(long i) const { return spec_.dim == 2 ? axis_coord(1, iy_of(i)) : 0.0; }

    bool contains(double x, double y = 0.0) const {
        if (x < spec_.axis[0].lo || x > spec_.axis[0].hi) return false;
        if (spec_.dim == 2 && (y < spec_.axis[1].lo || y > spec_.axis[1].hi)) return false;
        return true;
    }

    /// Largest distance from (x0, y0) to a corner of the box.
    double reach(double x0, double y0 = 0.0) const {
        double r = 0.0;
        for (double cx : {spec_.axis[0].lo, spec_.axis[0].hi}) {
            if (spec_.dim == 1) {
                r = std::max(r, std::abs(cx - x0));
            } else {
                for (double cy : {spec_.axis[1].lo, spec_.axis[1].hi})
                    r = std::max(r, std::hypot(cx - x0, cy - y0));
            }
        }
        return r;
    }

    const VecR& weights() const { return w_; }
    const SpMat& stiffness() const { return K_; }

    /// K u for complex u (K is real).
    VecC stiffness_apply(const VecC& u) const {
        check_size(u);
        VecC out(n_);
        out.real() = K_ * u.real().eval();
        out.imag() = K_ * u.imag().eval();
        return out;
    }

    /// Discrete -Laplace: W^{-1} K u.
    VecC laplacian_apply(const VecC& u) const {
        VecC out = stiffness_apply(u);
        out.array() /= w_.array().cast<std::complex<double>>();
        return out;
    }

    /// Solve (K + delta W) x = load for a complex load vector. Factorizations
    /// are cached per delta. Neumann requires delta > 0 (K alone is singular).
    VecC solve_shifted(double delta, const VecC& load) const {
        check_size(load);
        const auto& f = factor(delta);
        VecC out(n_);
        out.real() = f.solve(load.real().eval());
        out.imag() = f.solve(load.imag().eval());
        if (f.info() != Eigen::Success)
            throw std::runtime_error("DiscreteDomain: shifted solve failed");
        return out;
    }

    /// Visit every stiffness edge: fn(ia, ib, axis, mid_x, mid_y, measure, h).
    /// ib == -1 marks a Dirichlet boundary edge (value 0 on that side).
    template <class Fn>
    void for_each_edge(Fn&& fn) const {
        const double hx = h(0);
        const int mx = spec_.axis[0].cells;
        for (int iy = 0; iy < nu_[1]; ++iy) {
            const double wy = dim() == 2 ? aw_[1][iy] : 1.0;
            const double ycoord = dim() == 2 ? axis_coord(1, iy) : 0.0;
            for (int j = 0; j < mx; ++j) {
                long ia, ib;
                double midx;
                if (spec_.bc == Boundary::dirichlet) {
                    // edge between node positions j and j+1 of the full grid
                    ia = (j >= 1) ? index(j - 1, iy) : -1;
                    ib = (j <= mx - 2) ? index(j, iy) : -1;
                    midx = spec_.axis[0].lo + (j + 0.5) * hx;
                } else {
                    ia = index(j, iy);
                    ib = index(j + 1, iy);
                    midx = spec_.axis[0].lo + (j + 0.5) * hx;
                }
                if (ia < 0) std::swap(ia, ib);
                if (ia < 0) continue;  // cells == 1 cannot happen (cells >= 2)
                fn(ia, ib, 0, midx, ycoord, hx * wy, hx);
            }
        }
        if (dim() == 2) {
            const double hy = h(1);
            const int my = spec_.axis[1].cells;
            for (int ix = 0; ix < nu_[0]; ++ix) {
                const double wx = aw_[0][ix];
                const double xcoord = axis_coord(0, ix);
                for (int j = 0; j < my; ++j) {
                    long ia, ib;
                    const double midy = spec_.axis[1].lo + (j + 0.5) * hy;
                    if (spec_.bc == Boundary::dirichlet) {
                        ia = (j >= 1) ? index(ix, j - 1) : -1;
                        ib = (j <= my - 2) ? index(ix, j) : -1;
                    } else {
                        ia = index(ix, j);
                        ib = index(ix, j + 1);
                    }
                    if (ia < 0) std::swap(ia, ib);
                    if (ia < 0) continue;
                    fn(ia, ib, 1, xcoord, midy, hy * wx, hy);
                }
            }
        }
    }

    /// Node-centered gradient (centered differences, boundary handled per BC:
    /// zero value across a Dirichlet wall, mirrored ghost for Neumann).
    std::array<VecC, 2> node_gradient(const VecC& u) const {
        check_size(u);
        std::array<VecC, 2> g{VecC::Zero(n_), VecC::Zero(n_)};
        for (long i = 0; i < n_; ++i) {
            const int ix = ix_of(i), iy = iy_of(i);
            g[0][i] = centered(u, ix, iy, 0);
            if (dim() == 2) g[1][i] = centered(u, ix, iy, 1);
        }
        return g;
    }

private:
    int axis_unknowns(int d) const {
        const int m = spec_.axis[d].cells;
        return spec_.bc == Boundary::dirichlet ? m - 1 : m + 1;
    }

    double axis_coord(int d, int k) const {
        const double h0 = spec_.axis[d].h();
        const double off = spec_.bc == Boundary::dirichlet ? h0 : 0.0;
        return spec_.axis[d].lo + off + k * h0;
    }

    void build_weights() {
        for (int d = 0; d < 2; ++d) {
            aw_[d].assign(nu_[d], 1.0);
            if (d >= spec_.dim) continue;
            const double hd = spec_.axis[d].h();
            for (int k = 0; k < nu_[d]; ++k) {
                double wk = hd;
                if (spec_.bc == Boundary::neumann && (k == 0 || k == nu_[d] - 1))
                    wk = hd / 2.0;
                aw_[d][k] = wk;
            }
        }
        w_.resize(n_);
        for (long i = 0; i < n_; ++i)
            w_[i] = aw_[0][ix_of(i)] * aw_[1][iy_of(i)];
    }

    void build_stiffness() {
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<size_t>(5 * n_));
        for (long i = 0; i < n_; ++i) trip.emplace_back(i, i, 0.0);  // keep diagonal present
        for_each_edge([&](long ia, long ib, int, double, double, double measure, double he) {
            const double c = measure / (he * he);
            trip.emplace_back(ia, ia, c);
            if (ib >= 0) {
                trip.emplace_back(ib, ib, c);
                trip.emplace_back(ia, ib, -c);
                trip.emplace_back(ib, ia, -c);
            }
        });
        K_.resize(n_, n_);
        K_.setFromTriplets(trip.begin(), trip.end());
        K_.makeCompressed();
    }

    std::complex<double> neighbor(const VecC& u, int ix, int iy, int axis, int step) const {
        const int k = (axis == 0 ? ix : iy) + step;
        const int count = nu_[axis];
        if (k >= 0 && k < count)
            return u[axis == 0 ? index(k, iy) : index(ix, k)];
        if (spec_.bc == Boundary::dirichlet) return {0.0, 0.0};
        // mirrored ghost: value at the reflected interior node
        const int r = k < 0 ? 1 : count - 2;
        return u[axis == 0 ? index(r, iy) : index(ix, r)];
    }

    std::complex<double> centered(const VecC& u, int ix, int iy, int axis) const {
        const double hd = h(axis);
        return (neighbor(u, ix, iy, axis, +1) - neighbor(u, ix, iy, axis, -1)) / (2.0 * hd);
    }

    void check_size(const VecC& u) const {
        if (u.size() != n_)
            throw std::invalid_argument("DiscreteDomain: field size mismatch");
    }

    const Eigen::SimplicialLDLT<SpMat>& factor(double delta) const {
        if (delta < 0.0)
            throw std::invalid_argument("DiscreteDomain: negative shift");
        if (spec_.bc == Boundary::neumann && delta == 0.0)
            throw std::invalid_argument("DiscreteDomain: Neumann needs a positive shift");
        auto it = cache_.find(delta);
        if (it == cache_.end()) {
            SpMat A = K_;
            if (delta != 0.0) {
                SpMat W(n_, n_);
                std::vector<Eigen::Triplet<double>> trip;
                trip.reserve(static_cast<size_t>(n_));
                for (long i = 0; i < n_; ++i) trip.emplace_back(i, i, delta * w_[i]);
                W.setFromTriplets(trip.begin(), trip.end());
                A = K_ + W;
            }
            auto f = std::make_unique<Eigen::SimplicialLDLT<SpMat>>();
            f->compute(A);
            if (f->info() != Eigen::Success)
                throw std::runtime_error("DiscreteDomain: factorization failed");
            it = cache_.emplace(delta, std::move(f)).first;
        }
        return *it->second;
    }

    DomainSpec spec_;
    int nu_[2] = {0, 0};
    long n_ = 0;
    VecR w_;
    std::array<std::vector<double>, 2> aw_;  // per-axis trapezoid weights
    SpMat K_;
    mutable std::map<double, std::unique_ptr<Eigen::SimplicialLDLT<SpMat>>> cache_;
};

using DomainPtr = std::shared_ptr<const DiscreteDomain>;

inline DomainPtr build_grid(const DomainSpec& spec) {
    return std::make_shared<const DiscreteDomain>(spec);
}

inline DomainPtr build_interval(double lo, double hi, int cells, Boundary bc) {
    DomainSpec s;
    s.dim = 1;
    s.bc = bc;
    s.axis[0] = {lo, hi, cells};
    return build_grid(s);
}

inline DomainPtr build_rectangle(double xlo, double xhi, int xcells,
                                 double ylo, double yhi, int ycells, Boundary bc) {
    DomainSpec s;
    s.dim = 2;
    s.bc = bc;
    s.axis[0] = {xlo, xhi, xcells};
    s.axis[1] = {ylo, yhi, ycells};
    return build_grid(s);
}

/// A complex field on a domain, optionally carrying its saturated section.
struct FieldState {
    DomainPtr dom;
    VecC u;
    std::optional<VecC> section;

    static FieldState zero(DomainPtr d) {
        FieldState f;
        f.u = VecC::Zero(d->size());
        f.dom = std::move(d);
        return f;
    }
};

struct NormSet {
    double l1 = 0.0;
    double l2 = 0.0;
    double h1_semi = 0.0;
    double h1 = 0.0;
    double linf = 0.0;
};

inline NormSet norms(const DiscreteDomain& dom, const VecC& u) {
    if (u.size() != dom.size())
        throw std::invalid_argument("norms: field size mismatch");
    NormSet n;
    double l2sq = 0.0;
    for (long i = 0; i < u.size(); ++i) {
        const double m = std::abs(u[i]);
        n.l1 += dom.weights()[i] * m;
        l2sq += dom.weights()[i] * m * m;
        n.linf = std::max(n.linf, m);
    }
    const VecC Ku = dom.stiffness_apply(u);
    double semisq = 0.0;
    for (long i = 0; i < u.size(); ++i)
        semisq += std::real(Ku[i] * std::conj(u[i]));
    semisq = std::max(semisq, 0.0);
    n.l2 = std::sqrt(l2sq);
    n.h1_semi = std::sqrt(semisq);
    n.h1 = std::sqrt(l2sq + semisq);
    return n;
}

inline NormSet norms(const FieldState& f) { return norms(*f.dom, f.u); }

/// Weighted pairing sum_i w_i F_i conj(v_i).
inline std::complex<double> paired(const DiscreteDomain& dom, const VecC& F, const VecC& v) {
    std::complex<double> s{0.0, 0.0};
    for (long i = 0; i < dom.size(); ++i)
        s += dom.weights()[i] * F[i] * std::conj(v[i]);
    return s;
}

/// Discrete dual norm of a source density F: solve (K + W) r = W F and return
/// sqrt(Re <F, r>). Point loads should be folded into the density beforehand
/// (a mass c at node i is the density c / w_i).
inline double dual_norm(const DiscreteDomain& dom, const VecC& F) {
    if (F.size() != dom.size())
        throw std::invalid_argument("dual_norm: field size mismatch");
    VecC load = F;
    load.array() *= dom.weights().array().cast<std::complex<double>>();
    const VecC r = dom.solve_shifted(1.0, load);
    double v = 0.0;
    for (long i = 0; i < dom.size(); ++i)
        v += std::real(load[i] * std::conj(r[i]));
    return std::sqrt(std::max(v, 0.0));
}

/// Nodes of the closed ball B((x0,y0), rho) plus a shell decomposition of
/// width ~h_min for surface integrals. Shell j collects nodes with distance
/// in ((j-1) w, j w]; the center node is assigned to shell 1 so that
/// cumulative shell sums vanish at radius 0.
struct BallMask {
    double x0 = 0.0, y0 = 0.0;
    double rho = 0.0;
    double shell_width = 0.0;
    std::vector<long> inside;
    std::vector<std::vector<long>> shells;  // shells[0] unused (radius 0)

    int nshells() const { return static_cast<int>(shells.size()) - 1; }
    double radius(int j) const { return j * shell_width; }
};

inline BallMask ball_mask(const DiscreteDomain& dom, double x0, double y0, double rho) {
    if (!dom.contains(x0, y0))
        throw std::invalid_argument("ball_mask: center outside the domain");
    if (rho < 0.0)
        throw std::invalid_argument("ball_mask: negative radius");
    BallMask m;
    m.x0 = x0;
    m.y0 = y0;
    m.rho = rho;
    m.shell_width = dom.h_min();
    const int J = std::max(1, static_cast<int>(std::ceil(rho / m.shell_width - 1e-12)));
    m.shells.assign(static_cast<size_t>(J) + 1, {});
    for (long i = 0; i < dom.size(); ++i) {
        const double d = dom.dim() == 2 ? std::hypot(dom.x_of(i) - x0, dom.y_of(i) - y0)
                                        : std::abs(dom.x_of(i) - x0);
        if (d > rho) continue;
        m.inside.push_back(i);
        int j = d == 0.0 ? 1 : static_cast<int>(std::ceil(d / m.shell_width - 1e-12));
        j = std::clamp(j, 1, J);
        m.shells[static_cast<size_t>(j)].push_back(i);
    }
    return m;
}

} // namespace satnls

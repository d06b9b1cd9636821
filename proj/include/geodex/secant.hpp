#pragma once

#include "immersion.hpp"
#include "parallel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace geodex {

struct NearDiagonal : std::domain_error {
    NearDiagonal() : std::domain_error("chord endpoints are closer than the diagonal radius") {}
};

// Geometry of the chord geodesic from x to y, oriented x -> y.
struct ChordFrame {
    std::size_t i = 0, j = 0;
    Vec x, y;
    double r = 0.0;
    Vec dir_x, dir_y;
    double sigma1 = 0.0, sigma2 = 0.0;
    double sin1 = 0.0, sin2 = 0.0, cos1 = 0.0, cos2 = 0.0;
    double grad_product = 0.0;
    int m1_sign = 0;
};

namespace detail {

// Splits a unit vector into its tangential and normal parts w.r.t. an
// orthonormal frame; returns (|tangential|, |normal|) and the tangential part.
inline void split_angle(const ModelSpace& s, const Vec& d, const std::vector<Vec>& frame, double& c, double& sn_,
                        Vec& tangential) {
    tangential = Vec::Zero(d.size());
    for (const auto& e : frame) tangential += s.inner(d, e) * e;
    c = s.norm(tangential);
    sn_ = s.norm(d - tangential);
}

}  // namespace detail

inline ChordFrame chord_frame(const ModelSpace& space, const SurfaceSample& x, const SurfaceSample& y,
                              double r_min = 0.0) {
    ChordFrame f;
    f.x = x.point;
    f.y = y.point;
    f.r = space.distance(x.point, y.point);
    if (!(f.r > r_min) || f.r == 0.0) throw NearDiagonal();
    f.dir_x = space.log(x.point, y.point) / f.r;
    f.dir_y = -space.log(y.point, x.point) / f.r;
    Vec tx, ty;
    detail::split_angle(space, f.dir_x, x.frame, f.cos1, f.sin1, tx);
    detail::split_angle(space, f.dir_y, y.frame, f.cos2, f.sin2, ty);
    f.sigma1 = std::atan2(f.sin1, f.cos1);
    f.sigma2 = std::atan2(f.sin2, f.cos2);
    f.grad_product = std::min(1.0, f.cos1 * f.cos2);
    if (x.frame.size() == 1) {
        const double a = space.inner(x.frame[0], f.dir_x), b = space.inner(y.frame[0], f.dir_y);
        f.m1_sign = (a > 0) == (b > 0) ? 1 : -1;
        if (a == 0.0 || b == 0.0) f.m1_sign = 0;
    }
    return f;
}

inline ChordFrame chord_frame(const QuadratureAtlas& atlas, std::size_t i, std::size_t j, double r_min = 0.0) {
    ChordFrame f = chord_frame(atlas.space, atlas.nodes[i].s, atlas.nodes[j].s, r_min);
    f.i = i;
    f.j = j;
    return f;
}

// Jacobi transfer: the initial derivative at x of the Jacobi field along the
// chord that vanishes at x and equals v at y. The chord direction maps to 0.
inline Vec jacobi_transfer(const ModelSpace& space, const ChordFrame& f, const Vec& v) {
    const Vec w = v - space.inner(v, f.dir_y) * f.dir_y;
    return space.transport(f.y, f.x, w) / sn(space.kappa(), f.r);
}

struct TransferMap {
    Mat matrix;  // entries <target_a, J(source_b)>
    double det = 0.0;
};

// Matrix of the transfer restricted to span(source) in orthonormal bases, and
// the volume factor of J on that subspace.
inline TransferMap transfer_map(const ModelSpace& space, const ChordFrame& f, const std::vector<Vec>& source,
                                const std::vector<Vec>& target) {
    const int k = static_cast<int>(source.size());
    TransferMap t;
    t.matrix = Mat::Zero(static_cast<int>(target.size()), k);
    std::vector<Vec> images;
    for (const auto& v : source) images.push_back(jacobi_transfer(space, f, v));
    for (int a = 0; a < static_cast<int>(target.size()); ++a)
        for (int b = 0; b < k; ++b) t.matrix(a, b) = space.inner(target[a], images[b]);
    Mat gram(k, k);
    for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) gram(a, b) = space.inner(images[a], images[b]);
    t.det = std::sqrt(std::max(0.0, gram.determinant()));
    return t;
}

namespace detail {

inline double sign_of_binomial(int m) { return binomial2(m + 1) % 2 == 0 ? 1.0 : -1.0; }

inline double factorial(int m) { return std::tgamma(m + 1.0); }

}  // namespace detail

// Density of the pulled-back symplectic volume: m! (-1)^{C(m+1,2)} det(J*) in
// the oriented tangent frames, where J* is the transfer followed by projection onto T_x M.
inline double density_dI(const ModelSpace& space, const ChordFrame& f, const std::vector<Vec>& frame_x,
                         const std::vector<Vec>& frame_y) {
    const int m = static_cast<int>(frame_x.size());
    Mat a(m, m);
    for (int c = 0; c < m; ++c) {
        const Vec jv = jacobi_transfer(space, f, frame_y[c]);
        for (int r = 0; r < m; ++r) a(r, c) = space.inner(frame_x[r], jv);
    }
    return detail::factorial(m) * detail::sign_of_binomial(m) * a.determinant();
}

inline constexpr double orthogonal_chord_tol = 1e-12;

// Density of dr ^ (first connection form) ^ l*(dI)^{m-1}: (m-1)! (-1)^{C(m+1,2)}
// det of the two-block map that scales the chord-aligned tangent direction by
// cos(s1) cos(s2) and acts as the projected transfer on its complement.
inline double density_drw(const ModelSpace& space, const ChordFrame& f, const std::vector<Vec>& frame_x,
                          const std::vector<Vec>& frame_y) {
    if (f.cos1 < orthogonal_chord_tol || f.cos2 < orthogonal_chord_tol) return 0.0;
    const int m = static_cast<int>(frame_x.size());
    Vec ex = Vec::Zero(f.x.size()), by = Vec::Zero(f.y.size());
    for (const auto& e : frame_x) ex += space.inner(f.dir_x, e) * e;
    for (const auto& e : frame_y) by += space.inner(f.dir_y, e) * e;
    ex /= f.cos1;
    by /= f.cos2;
    Mat a(m, m);
    for (int c = 0; c < m; ++c) {
        const Vec& v = frame_y[c];
        const double along = space.inner(v, by);
        const Vec rest = v - along * by;
        Vec img = (along * f.cos1 * f.cos2) * ex;
        if (m > 1) {
            const Vec jw = jacobi_transfer(space, f, rest);
            // projection onto T_x M minus the chord-aligned direction
            Vec pj = Vec::Zero(f.x.size());
            for (const auto& e : frame_x) pj += space.inner(jw, e) * e;
            pj -= space.inner(pj, ex) * ex;
            img += pj;
        }
        for (int r = 0; r < m; ++r) a(r, c) = space.inner(frame_x[r], img);
    }
    return detail::factorial(m - 1) * detail::sign_of_binomial(m) * a.determinant();
}

enum class Integrand {
    inv_r_pow,              // 1 / r^p
    inv_sn_pow,             // 1 / sn_K(r)^p
    thm1b_mixed,            // [sn_K - sin s1 sin s2 (sn_K - r)] / sn_K^{n-1}
    r_times_density_dI,     // r rho1
    sn_plus_mr_density_dI,  // (sn_K + m r) rho1
    density_drw,            // rho2
    psi_yau,                // Psi_K^n(r, grad product)
    one_minus_grad_r_sq,    // (1 - grad product) r^2
};

inline std::string integrand_name(Integrand k) {
    switch (k) {
        case Integrand::inv_r_pow: return "inv_r_pow";
        case Integrand::inv_sn_pow: return "inv_sn_pow";
        case Integrand::thm1b_mixed: return "thm1b_mixed";
        case Integrand::r_times_density_dI: return "r_times_density_dI";
        case Integrand::sn_plus_mr_density_dI: return "sn_plus_mr_density_dI";
        case Integrand::density_drw: return "density_drw";
        case Integrand::psi_yau: return "psi_yau";
        case Integrand::one_minus_grad_r_sq: return "one_minus_grad_r_sq";
    }
    return "unknown";
}

struct IntegrandSpec {
    Integrand kind = Integrand::inv_r_pow;
    int power = 0;
    CurvatureBound bound{};

    bool needs_dI() const {
        return kind == Integrand::r_times_density_dI || kind == Integrand::sn_plus_mr_density_dI;
    }
    bool needs_drw() const { return kind == Integrand::density_drw; }
};

struct ChordValues {
    ChordFrame frame;
    double rho1 = 0.0, rho2 = 0.0;
};

inline double integrand_value(const IntegrandSpec& s, const ChordValues& c, int n, int m) {
    const ChordFrame& f = c.frame;
    switch (s.kind) {
        case Integrand::inv_r_pow: return std::pow(f.r, -s.power);
        case Integrand::inv_sn_pow: return std::pow(sn(s.bound, f.r), -s.power);
        case Integrand::thm1b_mixed: {
            const double snv = sn(s.bound, f.r);
            return (snv - f.sin1 * f.sin2 * sn_minus_r(s.bound, f.r)) / std::pow(snv, n - 1);
        }
        case Integrand::r_times_density_dI: return f.r * c.rho1;
        case Integrand::sn_plus_mr_density_dI: return (sn(s.bound, f.r) + m * f.r) * c.rho1;
        case Integrand::density_drw: return c.rho2;
        case Integrand::psi_yau: return psi(s.bound, n, f.r, f.grad_product);
        case Integrand::one_minus_grad_r_sq: return (1.0 - f.grad_product) * f.r * f.r;
    }
    return 0.0;
}

// Limit of the integrand as y -> x along a smooth curve; only curves reach it.
inline double curve_diagonal_limit(const IntegrandSpec& s, int n) {
    switch (s.kind) {
        case Integrand::inv_r_pow:
        case Integrand::inv_sn_pow:
            if (s.power != 0) throw std::domain_error("power of 1/r must vanish for curves");
            return 1.0;
        case Integrand::thm1b_mixed:
            if (n != 2) throw std::domain_error("thm1b integrand on curves requires n = 2");
            return 1.0;
        case Integrand::r_times_density_dI:
        case Integrand::sn_plus_mr_density_dI:
        case Integrand::one_minus_grad_r_sq: return 0.0;
        case Integrand::density_drw: return -1.0;
        case Integrand::psi_yau: return 1.0;
    }
    return 0.0;
}

inline ChordValues chord_values(const ModelSpace& space, const SurfaceSample& x, const SurfaceSample& y, bool need_dI,
                                bool need_drw) {
    ChordValues c;
    c.frame = chord_frame(space, x, y);
    if (need_dI) c.rho1 = density_dI(space, c.frame, x.frame, y.frame);
    if (need_drw) c.rho2 = density_drw(space, c.frame, x.frame, y.frame);
    return c;
}

struct ChordIntegral {
    double value = 0.0;
    double error = 0.0;
    double coarse = 0.0, fine = 0.0;
    bool converged = true;
};

struct ChordOptions {
    int level = 4;
    int workers = 1;
    double tolerance = 1e-3;  // relative two-level difference above which the result is flagged
};

// Plain tensor-product sums at one refinement level. Curves use the periodic
// trapezoid rule on N x N nodes with the diagonal filled by its limit;
// hypersurfaces use, for every outer node, polar coordinates about it on the
// parameter sphere, which absorbs the 1/r singularity into the area element.
inline std::vector<double> chord_sums(const Immersion& imm, int level, const std::vector<IntegrandSpec>& specs,
                                      int workers) {
    const QuadratureAtlas at = make_atlas(imm, level);
    const ModelSpace& space = at.space;
    const int n = space.dim(), m = at.m;
    bool need_dI = false, need_drw = false;
    for (const auto& s : specs) {
        need_dI |= s.needs_dI();
        need_drw |= s.needs_drw();
    }
    const std::size_t ns = specs.size();
    std::vector<double> rows(at.nodes.size() * ns, 0.0);

    if (m == 1) {
        std::vector<double> limits(ns);
        for (std::size_t k = 0; k < ns; ++k) limits[k] = curve_diagonal_limit(specs[k], n);
        parallel_for(at.nodes.size(), workers, [&](std::size_t i) {
            double* row = &rows[i * ns];
            for (std::size_t j = 0; j < at.nodes.size(); ++j) {
                const double w = at.nodes[j].weight;
                if (i == j || space.distance(at.nodes[i].s.point, at.nodes[j].s.point) == 0.0) {
                    for (std::size_t k = 0; k < ns; ++k) row[k] += w * limits[k];
                    continue;
                }
                const ChordValues c = chord_values(space, at.nodes[i].s, at.nodes[j].s, need_dI, need_drw);
                for (std::size_t k = 0; k < ns; ++k) row[k] += w * integrand_value(specs[k], c, n, m);
            }
            for (std::size_t k = 0; k < ns; ++k) row[k] *= at.nodes[i].weight;
        });
    } else {
        if (m != 2) throw std::invalid_argument("chord integrals are implemented for curves and surfaces");
        const int nt = surface_rings(level), np = 2 * nt;
        const auto gl = detail::gauss_legendre(nt);
        const double pi = boost::math::constants::pi<double>();
        const double dphi = 2.0 * pi / np;
        const double k2 = at.multiplicity;
        parallel_for(at.nodes.size(), workers, [&](std::size_t i) {
            const AtlasNode& xn = at.nodes[i];
            double* row = &rows[i * ns];
            for (std::size_t a = 0; a < gl.x.size(); ++a) {
                const double th = 0.5 * pi * (gl.x[a] + 1.0), wth = 0.5 * pi * gl.w[a];
                const double ct = std::cos(th), st = std::sin(th);
                for (int b = 0; b < np; ++b) {
                    const double ph = (b + 0.5) * dphi;
                    const double cp = std::cos(ph), sp = std::sin(ph);
                    const Vec radial = cp * xn.basis[0] + sp * xn.basis[1];
                    const Vec omega = ct * xn.omega + st * radial;
                    const Vec e_th = -st * xn.omega + ct * radial;
                    const Vec e_ph = -sp * xn.basis[0] + cp * xn.basis[1];
                    const SurfaceSample y = imm.sample(omega, {e_th, e_ph});
                    const double w = y.jacobian * wth * st * dphi * k2;
                    const ChordValues c = chord_values(space, xn.s, y, need_dI, need_drw);
                    for (std::size_t k = 0; k < ns; ++k) row[k] += w * integrand_value(specs[k], c, n, m);
                }
            }
            for (std::size_t k = 0; k < ns; ++k) row[k] *= xn.weight;
        });
    }
    std::vector<double> out(ns, 0.0);
    for (std::size_t i = 0; i < at.nodes.size(); ++i)
        for (std::size_t k = 0; k < ns; ++k) out[k] += rows[i * ns + k];
    return out;
}

// Two-level evaluation with Richardson extrapolation (assumed second order) and
// the level difference as error estimate.
inline std::vector<ChordIntegral> chord_integrals(const Immersion& imm, const std::vector<IntegrandSpec>& specs,
                                                  const ChordOptions& opt) {
    if (opt.level < 1) throw std::invalid_argument("chord integrals need refinement level >= 1");
    const auto coarse = chord_sums(imm, opt.level - 1, specs, opt.workers);
    const auto fine = chord_sums(imm, opt.level, specs, opt.workers);
    std::vector<ChordIntegral> out(specs.size());
    for (std::size_t k = 0; k < specs.size(); ++k) {
        ChordIntegral& r = out[k];
        r.coarse = coarse[k];
        r.fine = fine[k];
        r.value = fine[k] + (fine[k] - coarse[k]) / 3.0;
        // floor for cancellation in integrals whose exact value is near zero
        r.error = std::abs(fine[k] - coarse[k]) + 1e-13 * std::abs(fine[k]);
        r.converged = r.error <= opt.tolerance * std::max(std::abs(r.value), 1e-300);
    }
    return out;
}

inline ChordIntegral chord_integral(const Immersion& imm, const IntegrandSpec& spec, const ChordOptions& opt) {
    return chord_integrals(imm, {spec}, opt).front();
}

}  // namespace geodex

#pragma once

#include "modelspace.hpp"

#include <boost/math/constants/constants.hpp>
#include <boost/math/special_functions/chebyshev.hpp>
#include <boost/math/special_functions/legendre.hpp>

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace geodex {

enum class ImmersionKind { geodesic_sphere, perturbed_sphere, ellipsoid, space_curve };

inline ImmersionKind parse_kind(const std::string& s) {
    if (s == "geodesic_sphere" || s == "geodesic_circle") return ImmersionKind::geodesic_sphere;
    if (s == "perturbed_sphere" || s == "perturbed_circle") return ImmersionKind::perturbed_sphere;
    if (s == "ellipsoid" || s == "ellipse") return ImmersionKind::ellipsoid;
    if (s == "space_curve") return ImmersionKind::space_curve;
    throw std::invalid_argument("unknown immersion kind: " + s);
}

inline std::string kind_name(ImmersionKind k) {
    switch (k) {
        case ImmersionKind::geodesic_sphere: return "geodesic_sphere";
        case ImmersionKind::perturbed_sphere: return "perturbed_sphere";
        case ImmersionKind::ellipsoid: return "ellipsoid";
        case ImmersionKind::space_curve: return "space_curve";
    }
    return "unknown";
}

struct ImmersionParams {
    double radius = 1.0;
    double epsilon = 0.0;
    int harmonic = 3;
    std::vector<double> axes;
    // Torus-knot space curve: (A + B cos(q t)) (cos(p t), sin(p t)) + B sin(q t) e_3.
    double major = 1.0;
    double minor = 0.4;
    int turns = 2;
    int twists = 3;
};

// Image point with an oriented orthonormal tangent frame; jacobian is the
// volume distortion relative to the parameter measure.
struct SurfaceSample {
    Vec point;
    std::vector<Vec> frame;
    Vec normal;
    double jacobian = 0.0;
};

struct AtlasNode {
    SurfaceSample s;
    double weight = 0.0;
    Vec omega;               // parameter direction on S^{n-1} (hypersurfaces)
    std::array<Vec, 2> basis;  // oriented tangent basis of S^2 at omega (n = 3)
    double phi = 0.0;        // curve parameter
};

struct QuadratureAtlas {
    ModelSpace space;
    int m = 0;
    int multiplicity = 1;
    int level = 0;
    std::vector<AtlasNode> nodes;
    double spacing = 0.0;

    double volume() const {
        double v = 0.0;
        for (const auto& nd : nodes) v += nd.weight;
        return v;
    }
};

// Closed oriented mesh of geodesic facets; multiplicity scales every crossing.
struct FacetMesh {
    ModelSpace space;
    std::vector<Vec> vertices;
    std::vector<std::array<int, 3>> facets;  // n vertex indices (n <= 3)
    int multiplicity = 1;
    double spacing = 0.0;

    GeodesicSimplex simplex(std::size_t f) const {
        GeodesicSimplex s;
        for (int i = 0; i < space.dim(); ++i) s.vertices.push_back(vertices[facets[f][i]]);
        return s;
    }
};

namespace detail {

struct GaussRule {
    std::vector<double> x, w;
};

// Gauss-Legendre rule on [-1, 1].
inline GaussRule gauss_legendre(int n) {
    const auto zeros = boost::math::legendre_p_zeros<double>(n);
    GaussRule g;
    for (double z : zeros) {
        const double d = boost::math::legendre_p_prime(n, z);
        const double w = 2.0 / ((1.0 - z * z) * d * d);
        if (z == 0.0) {
            g.x.push_back(0.0);
            g.w.push_back(w);
        } else {
            g.x.push_back(z);
            g.w.push_back(w);
            g.x.push_back(-z);
            g.w.push_back(w);
        }
    }
    return g;
}

inline Vec vec3(double a, double b, double c) {
    Vec v(3);
    v << a, b, c;
    return v;
}

inline Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

// Oriented orthonormal tangent basis (a, b) of S^2 at omega with det[omega, a, b] > 0.
inline std::array<Vec, 2> sphere_basis(const Vec& omega) {
    const double st = std::hypot(omega[0], omega[1]);
    if (st > 1e-8) {
        const double ct = omega[2];
        const double cp = omega[0] / st, sp = omega[1] / st;
        return {vec3(ct * cp, ct * sp, -st), vec3(-sp, cp, 0.0)};
    }
    const double s = omega[2] >= 0 ? 1.0 : -1.0;
    return {vec3(s, 0.0, 0.0), vec3(0.0, 1.0, 0.0)};
}

}  // namespace detail

class Immersion {
public:
    Immersion(ModelSpace space, ImmersionKind kind, ImmersionParams params, int multiplicity = 1)
        : space_(space), kind_(kind), p_(std::move(params)), mult_(multiplicity) {
        validate();
    }

    const ModelSpace& space() const { return space_; }
    ImmersionKind kind() const { return kind_; }
    const ImmersionParams& params() const { return p_; }
    int multiplicity() const { return mult_; }
    int dim() const { return kind_ == ImmersionKind::space_curve ? 1 : space_.dim() - 1; }
    bool hypersurface() const { return dim() == space_.dim() - 1; }

    // Radial profile of the sphere kinds.
    double profile(const Vec& omega) const {
        if (kind_ == ImmersionKind::perturbed_sphere) {
            const double z = omega[omega.size() - 1];
            return p_.radius * (1.0 + p_.epsilon * boost::math::chebyshev_t(p_.harmonic, z));
        }
        return p_.radius;
    }

    // Normal coordinates X(omega) and directional derivatives along the given
    // tangent vectors of the parameter sphere.
    void normal_coords(const Vec& omega, const std::vector<Vec>& dirs, Vec& x, std::vector<Vec>& dx) const {
        const int n = space_.dim();
        dx.clear();
        if (kind_ == ImmersionKind::ellipsoid) {
            x = Vec(n);
            for (int i = 0; i < n; ++i) x[i] = p_.axes[i] * omega[i];
            for (const auto& a : dirs) {
                Vec d(n);
                for (int i = 0; i < n; ++i) d[i] = p_.axes[i] * a[i];
                dx.push_back(d);
            }
            return;
        }
        const double r = profile(omega);
        x = r * omega;
        for (const auto& a : dirs) {
            double dr = 0.0;
            if (kind_ == ImmersionKind::perturbed_sphere && p_.harmonic > 0) {
                const double z = omega[n - 1];
                dr = p_.radius * p_.epsilon * p_.harmonic *
                     boost::math::chebyshev_u(static_cast<unsigned>(p_.harmonic - 1), z) * a[n - 1];
            }
            dx.push_back(dr * omega + r * a);
        }
    }

    // Space curve in normal coordinates and its parameter derivative.
    void curve_coords(double t, Vec& x, Vec& dx) const {
        const double A = p_.major, B = p_.minor;
        const double p = p_.turns, q = p_.twists;
        const double rad = A + B * std::cos(q * t);
        const double drad = -B * q * std::sin(q * t);
        x = detail::vec3(rad * std::cos(p * t), rad * std::sin(p * t), B * std::sin(q * t));
        dx = detail::vec3(drad * std::cos(p * t) - rad * p * std::sin(p * t),
                          drad * std::sin(p * t) + rad * p * std::cos(p * t), B * q * std::cos(q * t));
    }

    // Hypersurface sample at a parameter direction with oriented tangent basis.
    SurfaceSample sample(const Vec& omega, const std::vector<Vec>& dirs) const {
        Vec x;
        std::vector<Vec> dx;
        normal_coords(omega, dirs, x, dx);
        return push_forward(x, dx);
    }

    // Curve sample: hypersurfaces of the plane use omega = (cos t, sin t).
    SurfaceSample curve_sample(double t) const {
        if (kind_ == ImmersionKind::space_curve) {
            Vec x, dx;
            curve_coords(t, x, dx);
            return push_forward(x, {dx});
        }
        return sample(detail::vec2(std::cos(t), std::sin(t)), {detail::vec2(-std::sin(t), std::cos(t))});
    }

    SurfaceSample push_forward(const Vec& x, const std::vector<Vec>& dx) const {
        SurfaceSample s;
        s.point = space_.point(x);
        std::vector<Vec> tangents;
        for (const auto& d : dx) tangents.push_back(exp_differential(x, d));
        // Gram-Schmidt keeps the parameter orientation; the jacobian is the product of pivots.
        double jac = 1.0;
        for (auto& t : tangents) {
            for (const auto& e : s.frame) t -= space_.inner(t, e) * e;
            const double tn = space_.norm(t);
            if (!(tn > 1e-12)) throw std::domain_error("immersion is rank deficient at a sample point");
            jac *= tn;
            s.frame.push_back(t / tn);
        }
        s.jacobian = jac;
        if (hypersurface()) s.normal = space_.complete_normal(s.point, s.frame);
        return s;
    }

    // Differential of the normal-coordinate chart at x applied to y.
    Vec exp_differential(const Vec& x, const Vec& y) const {
        if (space_.flat()) return y;
        const CurvatureBound k = space_.kappa();
        const double a = k.root();
        const double rho = x.norm();
        double f, g;
        if (a * rho < 1e-3) {
            const double a2r2 = a * a * rho * rho;
            f = 1.0 + a2r2 / 6.0 * (1.0 + a2r2 / 20.0);
            g = a * a / 3.0 * (1.0 + a2r2 / 10.0);
        } else {
            const double snv = sn(k, rho);
            f = snv / rho;
            g = (cs(k, rho) * rho - snv) / (rho * rho * rho);
        }
        const double xy = x.dot(y);
        Vec out(space_.ambient_dim());
        out[0] = a * f * xy;
        out.tail(space_.dim()) = f * y + g * xy * x;
        return out;
    }

private:
    void validate() const {
        if (mult_ < 1) throw std::invalid_argument("multiplicity must be a positive integer");
        const int n = space_.dim();
        switch (kind_) {
            case ImmersionKind::geodesic_sphere:
            case ImmersionKind::perturbed_sphere:
                if (n > 3) throw std::invalid_argument("hypersurface builtins are available for n = 2, 3");
                if (!(p_.radius > 0.0)) throw std::invalid_argument("radius must be positive");
                if (kind_ == ImmersionKind::perturbed_sphere) {
                    if (std::abs(p_.epsilon) > 0.3) throw std::invalid_argument("perturbation amplitude must satisfy |eps| <= 0.3");
                    if (p_.harmonic < 0) throw std::invalid_argument("harmonic index must be non-negative");
                }
                break;
            case ImmersionKind::ellipsoid:
                if (!space_.flat()) throw std::invalid_argument("ellipsoid is defined only in flat space");
                if (n > 3) throw std::invalid_argument("hypersurface builtins are available for n = 2, 3");
                if (static_cast<int>(p_.axes.size()) != n) throw std::invalid_argument("ellipsoid needs n semi-axes");
                for (double a : p_.axes)
                    if (!(a > 0.0)) throw std::invalid_argument("semi-axes must be positive");
                break;
            case ImmersionKind::space_curve:
                if (n != 3) throw std::invalid_argument("space_curve requires n = 3");
                if (!(p_.major > p_.minor && p_.minor >= 0.0)) throw std::invalid_argument("space_curve needs major > minor >= 0");
                if (p_.turns < 1 || p_.twists < 0) throw std::invalid_argument("space_curve needs turns >= 1, twists >= 0");
                break;
        }
    }

    ModelSpace space_;
    ImmersionKind kind_;
    ImmersionParams p_;
    int mult_;
};

inline Immersion make_builtin(const ModelSpace& space, const std::string& kind, const ImmersionParams& params,
                              int multiplicity = 1) {
    const ImmersionKind k = parse_kind(kind);
    if (kind == "geodesic_circle" || kind == "perturbed_circle" || kind == "ellipse") {
        if (space.dim() != 2) throw std::invalid_argument(kind + " requires n = 2");
    }
    return Immersion(space, k, params, multiplicity);
}

// Nodes per curve and latitude rings per surface at a refinement level.
inline int curve_nodes(int level) { return 32 << level; }
inline int surface_rings(int level) { return 2 << level; }

inline QuadratureAtlas make_atlas(const Immersion& imm, int level) {
    if (level < 0 || level > 8) throw std::invalid_argument("refinement level must be in [0, 8]");
    const double pi = boost::math::constants::pi<double>();
    QuadratureAtlas at{imm.space(), imm.dim(), imm.multiplicity(), level, {}, 0.0};
    const double k = imm.multiplicity();
    if (imm.dim() == 1) {
        const int n = curve_nodes(level);
        const double dt = 2.0 * pi / n;
        for (int i = 0; i < n; ++i) {
            AtlasNode nd;
            nd.phi = i * dt;
            nd.s = imm.curve_sample(nd.phi);
            nd.weight = nd.s.jacobian * dt * k;
            at.nodes.push_back(std::move(nd));
        }
        // closure: the parametrization must be periodic
        const SurfaceSample a = imm.curve_sample(0.0), b = imm.curve_sample(2.0 * pi);
        if (imm.space().distance(a.point, b.point) > 1e-10) throw std::domain_error("curve does not close");
        at.spacing = at.volume() / (k * n);
        return at;
    }
    const int nt = surface_rings(level);
    const int np = 2 * nt;
    const auto gl = detail::gauss_legendre(nt);
    const double dphi = 2.0 * pi / np;
    for (std::size_t i = 0; i < gl.x.size(); ++i) {
        const double z = gl.x[i], st = std::sqrt(1.0 - z * z);
        for (int j = 0; j < np; ++j) {
            const double ph = (j + 0.5) * dphi;
            AtlasNode nd;
            nd.omega = detail::vec3(st * std::cos(ph), st * std::sin(ph), z);
            nd.basis = detail::sphere_basis(nd.omega);
            nd.s = imm.sample(nd.omega, {nd.basis[0], nd.basis[1]});
            nd.weight = nd.s.jacobian * gl.w[i] * dphi * k;
            at.nodes.push_back(std::move(nd));
        }
    }
    at.spacing = std::sqrt(at.volume() / (k * at.nodes.size()));
    return at;
}

// Vertex offset that keeps mesh vertices away from quadrature nodes.
inline constexpr double mesh_phase = 0.3819660112501051;

// Facet mesh with vertices on the immersed image; resolution is the number of
// segments (curves) or latitude rings (surfaces).
inline FacetMesh make_mesh(const Immersion& imm, int resolution) {
    if (!imm.hypersurface()) throw std::invalid_argument("facet meshes exist only for hypersurfaces");
    const double pi = boost::math::constants::pi<double>();
    FacetMesh mesh{imm.space(), {}, {}, imm.multiplicity(), 0.0};
    if (imm.space().dim() == 2) {
        if (resolution < 8) throw std::invalid_argument("mesh resolution too small");
        for (int i = 0; i < resolution; ++i) {
            const double t = 2.0 * pi * (i + mesh_phase) / resolution;
            mesh.vertices.push_back(imm.curve_sample(t).point);
            mesh.facets.push_back({i, (i + 1) % resolution, 0});
        }
        mesh.spacing = 2.0 * pi / resolution;
        return mesh;
    }
    const int rings = resolution;
    if (rings < 4) throw std::invalid_argument("mesh resolution too small");
    const int np = 2 * rings;
    auto point_at = [&](double theta, double ph) {
        const Vec omega = detail::vec3(std::sin(theta) * std::cos(ph), std::sin(theta) * std::sin(ph), std::cos(theta));
        Vec x;
        std::vector<Vec> dx;
        imm.normal_coords(omega, {}, x, dx);
        return imm.space().point(x);
    };
    mesh.vertices.push_back(point_at(0.0, 0.0));
    for (int j = 1; j < rings; ++j)
        for (int k = 0; k < np; ++k) mesh.vertices.push_back(point_at(pi * j / rings, 2.0 * pi * (k + mesh_phase) / np));
    mesh.vertices.push_back(point_at(pi, 0.0));
    const int south = static_cast<int>(mesh.vertices.size()) - 1;
    auto idx = [&](int j, int k) { return 1 + (j - 1) * np + (k % np); };
    for (int k = 0; k < np; ++k) mesh.facets.push_back({0, idx(1, k), idx(1, k + 1)});
    for (int j = 1; j < rings - 1; ++j) {
        for (int k = 0; k < np; ++k) {
            mesh.facets.push_back({idx(j, k), idx(j + 1, k), idx(j + 1, k + 1)});
            mesh.facets.push_back({idx(j, k), idx(j + 1, k + 1), idx(j, k + 1)});
        }
    }
    for (int k = 0; k < np; ++k) mesh.facets.push_back({idx(rings - 1, k), south, idx(rings - 1, k + 1)});
    mesh.spacing = pi / rings;
    return mesh;
}

}  // namespace geodex

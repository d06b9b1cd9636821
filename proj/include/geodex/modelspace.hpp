#pragma once

#include "comparison.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace geodex {

inline constexpr int max_ambient = 5;

// Ambient coordinate vector: R^n for K = 0, Minkowski R^{n+1} for K < 0.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, max_ambient, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, max_ambient, max_ambient>;

// Constant-curvature Cartan-Hadamard model: Euclidean space or the upper
// hyperboloid <p,p> = -1/|K| with time coordinate first.
class ModelSpace {
public:
    ModelSpace(int n, CurvatureBound kappa) : n_(n), kappa_(kappa) {
        if (n < 2 || n + 1 > max_ambient)
            throw std::invalid_argument("model space dimension must be in [2, 4]");
    }

    int dim() const { return n_; }
    CurvatureBound kappa() const { return kappa_; }
    bool flat() const { return kappa_.flat(); }
    int ambient_dim() const { return flat() ? n_ : n_ + 1; }

    bool operator==(const ModelSpace& o) const { return n_ == o.n_ && kappa_.value() == o.kappa_.value(); }
    bool operator!=(const ModelSpace& o) const { return !(*this == o); }

    double inner(const Vec& a, const Vec& b) const {
        if (flat()) return a.dot(b);
        return a.tail(n_).dot(b.tail(n_)) - a[0] * b[0];
    }
    double norm(const Vec& v) const { return std::sqrt(std::max(0.0, inner(v, v))); }

    Vec origin() const {
        Vec o = Vec::Zero(ambient_dim());
        if (!flat()) o[0] = 1.0 / kappa_.root();
        return o;
    }

    // Point with normal coordinates x (length n) about the origin.
    Vec point(const Vec& x) const {
        if (x.size() != n_) throw std::invalid_argument("coordinate length must equal n");
        if (flat()) return x;
        Vec v(ambient_dim());
        v[0] = 0.0;
        v.tail(n_) = x;
        return exp(origin(), v);
    }

    // Tangent vector at the origin with components x.
    Vec origin_tangent(const Vec& x) const {
        if (flat()) return x;
        Vec v(ambient_dim());
        v[0] = 0.0;
        v.tail(n_) = x;
        return v;
    }

    Vec project_point(const Vec& p) const {
        if (flat()) return p;
        Vec q = p;
        const double s = q.tail(n_).squaredNorm();
        q[0] = std::sqrt(1.0 / kappa_.magnitude() + s);
        return q;
    }

    Vec project_tangent(const Vec& p, const Vec& v) const {
        if (flat()) return v;
        return v + kappa_.magnitude() * inner(p, v) * p;
    }

    bool is_point(const Vec& p, double tol = 1e-8) const {
        if (p.size() != ambient_dim()) return false;
        if (flat()) return true;
        return p[0] > 0.0 && std::abs(inner(p, p) + 1.0 / kappa_.magnitude()) < tol;
    }

    double distance(const Vec& p, const Vec& q) const {
        check(p);
        check(q);
        if (flat()) return (p - q).norm();
        // Chord form 2/a asinh(a|p-q|/2) stays accurate for nearby points.
        const double a = kappa_.root();
        const double c = -kappa_.magnitude() * inner(p, q);
        if (c > 2.0) return std::acosh(c) / a;
        const Vec d = p - q;
        return 2.0 / a * std::asinh(0.5 * a * norm(d));
    }

    Vec exp(const Vec& p, const Vec& v) const {
        if (flat()) return p + v;
        const double t = norm(v);
        if (t == 0.0) return p;
        const double a = kappa_.root();
        const Vec q = std::cosh(a * t) * p + (sn(kappa_, t) / t) * v;
        return project_point(q);
    }

    Vec log(const Vec& p, const Vec& q) const {
        if (flat()) return q - p;
        const double d = distance(p, q);
        if (d == 0.0) return Vec::Zero(ambient_dim());
        const Vec u = q + kappa_.magnitude() * inner(p, q) * p;
        const double un = norm(u);
        if (un == 0.0) return Vec::Zero(ambient_dim());
        return project_tangent(p, u * (d / un));
    }

    // Parallel transport of v from T_p to T_q along the joining geodesic.
    Vec transport(const Vec& p, const Vec& q, const Vec& v) const {
        if (flat()) return v;
        const double a = kappa_.root();
        const Vec ph = a * p, qh = a * q;
        const double c = inner(qh, v) / (1.0 - inner(ph, qh));
        return project_tangent(q, v + c * (ph + qh));
    }

    // Oriented volume of an n-frame of T_p (positive for the standard orientation).
    double orientation(const Vec& p, const std::vector<Vec>& frame) const {
        Mat m(ambient_dim(), ambient_dim());
        int c = 0;
        if (!flat()) m.col(c++) = p;
        for (const auto& f : frame) m.col(c++) = f;
        if (c != ambient_dim()) throw std::invalid_argument("frame must have n vectors");
        return m.determinant();
    }

    // Unit normal to the span of an orthonormal (n-1)-frame at p, oriented so that
    // (normal, frame...) is positive.
    Vec complete_normal(const Vec& p, const std::vector<Vec>& frame) const {
        const int dim = ambient_dim();
        if (n_ == 3 && frame.size() == 2) {
            // Generalized cross product: <nu, x> is proportional to det[(p,) x, frame].
            Vec c(dim);
            if (flat()) {
                c = frame[0].head<3>().cross(frame[1].head<3>());
            } else {
                Eigen::Matrix<double, 4, 3> m;
                m << p, frame[0], frame[1];
                for (int i = 0; i < 4; ++i) {
                    Eigen::Matrix3d minor;
                    for (int r = 0, k = 0; r < 4; ++r)
                        if (r != i) minor.row(k++) = m.row(r);
                    c[i] = ((i % 2) ? 1.0 : -1.0) * minor.determinant();
                }
                c[0] = -c[0];
            }
            return c / norm(c);
        }
        Vec best;
        double best_norm = -1.0;
        for (int i = 0; i < dim; ++i) {
            Vec e = Vec::Zero(dim);
            e[i] = 1.0;
            Vec r = project_tangent(p, e);
            for (const auto& f : frame) r -= inner(r, f) * f;
            const double rn = norm(r);
            if (rn > best_norm) {
                best_norm = rn;
                best = r;
            }
        }
        best /= best_norm;
        for (const auto& f : frame) best -= inner(best, f) * f;
        best /= norm(best);
        std::vector<Vec> full{best};
        full.insert(full.end(), frame.begin(), frame.end());
        if (orientation(p, full) < 0.0) best = -best;
        return best;
    }

    // Homogeneous lift used for linear-algebra intersection: (1, p) in flat space.
    Vec lift_point(const Vec& p) const {
        if (!flat()) return p;
        Vec h(n_ + 1);
        h[0] = 1.0;
        h.tail(n_) = p;
        return h;
    }
    Vec lift_direction(const Vec& v) const {
        if (!flat()) return v;
        Vec h(n_ + 1);
        h[0] = 0.0;
        h.tail(n_) = v;
        return h;
    }

    // Projective chart (identity, or the Beltrami-Klein model) in which geodesics are lines.
    Vec chart(const Vec& p) const {
        if (flat()) return p;
        return p.tail(n_) / p[0];
    }
    Vec chart_direction(const Vec& p, const Vec& v) const {
        if (flat()) return v;
        return (v.tail(n_) - p.tail(n_) * (v[0] / p[0])) / p[0];
    }

private:
    void check(const Vec& p) const {
        if (p.size() != ambient_dim()) throw std::invalid_argument("point does not belong to this model space");
    }

    int n_;
    CurvatureBound kappa_;
};

// Geodesic simplex with n vertices (a facet of a hypersurface mesh).
struct GeodesicSimplex {
    std::vector<Vec> vertices;
};

struct Crossing {
    double t;  // arclength parameter along the geodesic
    int sign;  // oriented intersection number
};

enum class Extent { ray, full };

struct IntersectionResult {
    std::vector<Crossing> crossings;
    bool degenerate = false;
};

inline constexpr double degeneracy_tol = 1e-9;

// Crossing of the geodesic through p with unit direction v and an (n-1)-simplex,
// solved in the homogeneous ambient space: p + s v = sum_i lambda_i v_i.
inline IntersectionResult geodesic_simplex_intersections(const ModelSpace& space, const Vec& p, const Vec& v,
                                                         const GeodesicSimplex& s, Extent extent) {
    const int n = space.dim();
    if (static_cast<int>(s.vertices.size()) != n)
        throw std::invalid_argument("facet simplex must have n vertices");
    const int dim = n + 1;
    const Vec hp = space.lift_point(p);
    const Vec hv = space.lift_direction(v / space.norm(v));
    Mat a(dim, dim);
    a.col(0) = -hv;
    for (int i = 0; i < n; ++i) a.col(i + 1) = space.lift_point(s.vertices[i]);

    IntersectionResult out;
    Mat hull(dim, n);
    for (int i = 0; i < n; ++i) hull.col(i) = a.col(i + 1);
    const double gram = std::sqrt(std::max(0.0, (hull.transpose() * hull).determinant()));
    const double det = a.determinant();
    const double transversality = std::abs(det) / (hv.norm() * gram);
    if (transversality < degeneracy_tol) {
        out.degenerate = true;
        return out;
    }
    const Vec sol = a.partialPivLu().solve(hp);
    const double s_par = sol[0];
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += sol[i + 1];
    if (total <= 0.0) return out;
    double min_bary = 1.0;
    for (int i = 0; i < n; ++i) min_bary = std::min(min_bary, sol[i + 1] / total);
    if (min_bary < -degeneracy_tol) return out;
    double t;
    if (space.flat()) {
        t = s_par;
    } else {
        const double a_root = space.kappa().root();
        const double x = s_par * a_root;
        if (std::abs(x) >= 1.0) return out;
        t = std::atanh(x) / a_root;
    }
    if (extent == Extent::ray && t < 0.0) return out;
    if (min_bary < degeneracy_tol) {
        out.degenerate = true;
        return out;
    }
    out.crossings.push_back({t, det > 0.0 ? 1 : -1});
    return out;
}

}  // namespace geodex

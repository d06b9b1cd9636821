#pragma once

#include "immersion.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace geodex {

// Bounding-volume hierarchy over a facet mesh, built in the projective chart
// where geodesics are straight lines and geodesic facets are flat simplices.
class RayCaster {
public:
    struct Hit {
        double s;  // chart parameter, monotone in arclength
        int sign;  // oriented intersection number of one sheet
    };

    explicit RayCaster(const FacetMesh& mesh) : space_(mesh.space), n_(mesh.space.dim()), mult_(mesh.multiplicity) {
        facets_.reserve(mesh.facets.size());
        for (const auto& f : mesh.facets) facets_.push_back(prepare(mesh, f));
        order_.resize(facets_.size());
        std::iota(order_.begin(), order_.end(), 0);
        nodes_.reserve(2 * facets_.size() / leaf_size + 2);
        if (!facets_.empty()) build(0, static_cast<int>(facets_.size()));
    }

    const ModelSpace& space() const { return space_; }
    int multiplicity() const { return mult_; }
    std::size_t size() const { return facets_.size(); }

    // Crossings of the geodesic through p with direction v. Returns false when a
    // crossing is too close to a facet boundary or to tangency.
    bool cast(const Vec& p, const Vec& v, Extent extent, std::vector<Hit>& hits) const {
        hits.clear();
        const Vec o = space_.chart(p);
        const Vec d = space_.chart_direction(p, v);
        std::array<double, 3> org{0, 0, 0}, dir{0, 0, 0}, inv{0, 0, 0};
        for (int i = 0; i < n_; ++i) {
            org[i] = o[i];
            dir[i] = d[i];
        }
        const double dn = std::sqrt(dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]);
        for (int i = 0; i < 3; ++i) dir[i] /= dn;
        for (int i = 0; i < n_; ++i) inv[i] = 1.0 / dir[i];
        const double smin = extent == Extent::ray ? 0.0 : -std::numeric_limits<double>::infinity();
        if (nodes_.empty()) return true;

        int stack[96];
        int top = 0;
        stack[top++] = 0;
        bool ok = true;
        while (top > 0) {
            const Node& nd = nodes_[stack[--top]];
            if (!box_hit(nd, org, inv, smin)) continue;
            if (nd.count > 0) {
                for (int i = nd.first; i < nd.first + nd.count; ++i)
                    if (!test(facets_[order_[i]], org, dir, extent, hits)) ok = false;
            } else {
                stack[top++] = nd.left;
                stack[top++] = nd.right;
            }
        }
        return ok;
    }

private:
    static constexpr int leaf_size = 4;

    struct Facet {
        std::array<double, 3> k0{}, normal{};
        std::array<std::array<double, 3>, 2> dual{};
        std::array<double, 3> lo{}, hi{};
        double normal_len = 0.0;
    };

    struct Node {
        std::array<double, 3> lo{}, hi{};
        int left = -1, right = -1, first = 0, count = 0;
    };

    Facet prepare(const FacetMesh& mesh, const std::array<int, 3>& idx) const {
        Facet f;
        std::array<std::array<double, 3>, 3> k{};
        for (int v = 0; v < n_; ++v) {
            const Vec c = space_.chart(mesh.vertices[idx[v]]);
            for (int i = 0; i < n_; ++i) k[v][i] = c[i];
        }
        f.k0 = k[0];
        for (int i = 0; i < 3; ++i) {
            f.lo[i] = f.hi[i] = k[0][i];
            for (int v = 1; v < n_; ++v) {
                f.lo[i] = std::min(f.lo[i], k[v][i]);
                f.hi[i] = std::max(f.hi[i], k[v][i]);
            }
        }
        if (n_ == 2) {
            const double e0 = k[1][0] - k[0][0], e1 = k[1][1] - k[0][1];
            // det[x, e] = x0 e1 - x1 e0
            f.normal = {e1, -e0, 0.0};
            const double ee = e0 * e0 + e1 * e1;
            f.dual[0] = {e0 / ee, e1 / ee, 0.0};
        } else {
            std::array<double, 3> a{}, b{};
            for (int i = 0; i < 3; ++i) {
                a[i] = k[1][i] - k[0][i];
                b[i] = k[2][i] - k[0][i];
            }
            f.normal = {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
            const double aa = dot(a, a), ab = dot(a, b), bb = dot(b, b);
            const double det = aa * bb - ab * ab;
            for (int i = 0; i < 3; ++i) {
                f.dual[0][i] = (bb * a[i] - ab * b[i]) / det;
                f.dual[1][i] = (aa * b[i] - ab * a[i]) / det;
            }
        }
        f.normal_len = std::sqrt(dot(f.normal, f.normal));
        return f;
    }

    static double dot(const std::array<double, 3>& a, const std::array<double, 3>& b) {
        return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    }

    bool test(const Facet& f, const std::array<double, 3>& o, const std::array<double, 3>& d, Extent extent,
              std::vector<Hit>& hits) const {
        std::array<double, 3> w{f.k0[0] - o[0], f.k0[1] - o[1], f.k0[2] - o[2]};
        const double denom = dot(f.normal, d);
        const double offset = dot(f.normal, w);
        if (std::abs(denom) < degeneracy_tol * f.normal_len) {
            // Parallel: only a coplanar line can touch the facet.
            return std::abs(offset) >= degeneracy_tol * f.normal_len;
        }
        const double s = offset / denom;
        std::array<double, 3> q{o[0] + s * d[0] - f.k0[0], o[1] + s * d[1] - f.k0[1], o[2] + s * d[2] - f.k0[2]};
        double bary_min;
        if (n_ == 2) {
            const double b1 = dot(f.dual[0], q);
            bary_min = std::min(b1, 1.0 - b1);
        } else {
            const double b1 = dot(f.dual[0], q), b2 = dot(f.dual[1], q);
            bary_min = std::min({b1, b2, 1.0 - b1 - b2});
        }
        if (bary_min < -degeneracy_tol) return true;
        if (extent == Extent::ray) {
            if (s < -degeneracy_tol) return true;
            if (s < degeneracy_tol) return false;
        }
        if (bary_min < degeneracy_tol) return false;
        hits.push_back({s, denom > 0.0 ? 1 : -1});
        return true;
    }

    bool box_hit(const Node& nd, const std::array<double, 3>& o, const std::array<double, 3>& inv, double smin) const {
        double t0 = smin, t1 = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n_; ++i) {
            double a = (nd.lo[i] - o[i]) * inv[i];
            double b = (nd.hi[i] - o[i]) * inv[i];
            if (a > b) std::swap(a, b);
            if (std::isnan(a) || std::isnan(b)) {
                // direction parallel to this axis and origin on a slab face
                if (o[i] < nd.lo[i] || o[i] > nd.hi[i]) return false;
                continue;
            }
            t0 = std::max(t0, a);
            t1 = std::min(t1, b);
            if (t0 > t1 * (1.0 + 1e-12) + 1e-12) return false;
        }
        return true;
    }

    int build(int first, int count) {
        const int id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        Node nd;
        for (int i = 0; i < 3; ++i) {
            nd.lo[i] = std::numeric_limits<double>::infinity();
            nd.hi[i] = -std::numeric_limits<double>::infinity();
        }
        std::array<double, 3> clo = nd.lo, chi = nd.hi;
        for (int j = first; j < first + count; ++j) {
            const Facet& f = facets_[order_[j]];
            for (int i = 0; i < 3; ++i) {
                nd.lo[i] = std::min(nd.lo[i], f.lo[i]);
                nd.hi[i] = std::max(nd.hi[i], f.hi[i]);
                const double c = 0.5 * (f.lo[i] + f.hi[i]);
                clo[i] = std::min(clo[i], c);
                chi[i] = std::max(chi[i], c);
            }
        }
        // Pad boxes slightly so grazing rays are still tested against the facets.
        for (int i = 0; i < 3; ++i) {
            const double pad = 1e-9 * (1.0 + std::abs(nd.lo[i]) + std::abs(nd.hi[i]));
            nd.lo[i] -= pad;
            nd.hi[i] += pad;
        }
        if (count <= leaf_size) {
            nd.first = first;
            nd.count = count;
            nodes_[id] = nd;
            return id;
        }
        int axis = 0;
        for (int i = 1; i < n_; ++i)
            if (chi[i] - clo[i] > chi[axis] - clo[axis]) axis = i;
        const int mid = first + count / 2;
        std::nth_element(order_.begin() + first, order_.begin() + mid, order_.begin() + first + count,
                         [&](int a, int b) {
                             const Facet &fa = facets_[a], &fb = facets_[b];
                             return fa.lo[axis] + fa.hi[axis] < fb.lo[axis] + fb.hi[axis];
                         });
        nd.left = build(first, mid - first);
        nd.right = build(mid, first + count - mid);
        nodes_[id] = nd;
        return id;
    }

    ModelSpace space_;
    int n_;
    int mult_;
    std::vector<Facet> facets_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
};

}  // namespace geodex

#pragma once

#include "parallel.hpp"
#include "raycast.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace geodex {

struct OrientedGeodesic {
    Vec base;
    Vec dir;  // unit
    bool ray = false;
};

// Coordinates of a geodesic relative to a reference point p: v = log_p(foot of
// perpendicular), u = the geodesic direction at the foot transported back to p.
struct GeodesicChart {
    Vec p, u, v;
};

inline Vec geodesic_point(const ModelSpace& space, const OrientedGeodesic& g, double t) {
    return space.exp(g.base, t * g.dir);
}

inline Vec geodesic_velocity(const ModelSpace& space, const OrientedGeodesic& g, double t) {
    if (space.flat()) return g.dir;
    const double a = space.kappa().root();
    return space.project_tangent(geodesic_point(space, g, t),
                                 a * std::sinh(a * t) * g.base + std::cosh(a * t) * g.dir);
}

// Arclength parameter of the point of g nearest to p.
inline double foot_parameter(const ModelSpace& space, const OrientedGeodesic& g, const Vec& p) {
    if (space.flat()) return (p - g.base).dot(g.dir);
    const double a = space.kappa().root();
    const double A = -space.inner(p, g.base);
    const double B = -space.inner(p, g.dir) / a;
    return std::atanh(-B / A) / a;
}

inline GeodesicChart to_chart(const ModelSpace& space, const OrientedGeodesic& g, const Vec& p) {
    const double t = foot_parameter(space, g, p);
    const Vec b = geodesic_point(space, g, t);
    const Vec db = geodesic_velocity(space, g, t);
    GeodesicChart c{p, space.transport(b, p, db), space.log(p, b)};
    c.u /= space.norm(c.u);
    // remove round-off so that <u, v> = 0 holds tightly
    const double vv = space.inner(c.v, c.v);
    if (vv > 0.0) c.u -= space.inner(c.u, c.v) / vv * c.v;
    c.u /= space.norm(c.u);
    return c;
}

inline OrientedGeodesic from_chart(const ModelSpace& space, const GeodesicChart& c) {
    const Vec b = space.exp(c.p, c.v);
    Vec d = space.transport(c.p, b, c.u);
    d /= space.norm(d);
    return {b, d, false};
}

// Uniform unit tangent vector at p.
inline Vec random_direction(const ModelSpace& space, const Vec& p, Stream& rng) {
    Vec x(space.dim());
    do {
        for (int i = 0; i < space.dim(); ++i) x[i] = rng.normal();
    } while (x.norm() < 1e-12);
    x /= x.norm();
    const Vec v = space.origin_tangent(x);
    if (space.flat()) return v;
    Vec w = space.transport(space.origin(), p, v);
    return w / space.norm(w);
}

// Purpose tags that separate the random streams of different estimators.
enum class StreamPurpose : std::uint64_t { winding = 1, crofton = 2, croke = 3 };

inline std::uint64_t stream_key(StreamPurpose purpose, std::uint64_t salt) {
    return (salt << 8) | static_cast<std::uint64_t>(purpose);
}

struct WindingResult {
    int value = 0;
    bool reliable = true;
};

inline constexpr int winding_attempts = 10;

// Signed crossing count of a random ray from p; three independent directions
// must agree, otherwise the whole triple is redrawn.
inline WindingResult winding_number(const RayCaster& caster, const Vec& p, Stream& rng) {
    const ModelSpace& space = caster.space();
    std::vector<RayCaster::Hit> hits;
    for (int attempt = 0; attempt < winding_attempts; ++attempt) {
        int values[3];
        bool ok = true;
        for (int& v : values) {
            if (!caster.cast(p, random_direction(space, p, rng), Extent::ray, hits)) {
                ok = false;
                break;
            }
            v = 0;
            for (const auto& h : hits) v += h.sign;
        }
        if (ok && values[0] == values[1] && values[1] == values[2])
            return {values[0] * caster.multiplicity(), true};
    }
    return {0, false};
}

struct WindingEstimate {
    double w2 = 0.0, w2_se = 0.0;
    double w1 = 0.0, w1_se = 0.0;
    // faceting error estimated from a half-resolution mesh at the same points
    double w2_mesh = 0.0, w1_mesh = 0.0;
    std::size_t samples = 0;
    std::size_t unreliable = 0;
    double radius = 0.0;
    Vec center;
};

struct BoundingBall {
    Vec center;
    double radius = 0.0;
};

inline BoundingBall bounding_ball(const FacetMesh& mesh) {
    const ModelSpace& space = mesh.space;
    Vec c = Vec::Zero(space.ambient_dim());
    for (const auto& v : mesh.vertices) c += v;
    c /= static_cast<double>(mesh.vertices.size());
    if (!space.flat()) c /= space.kappa().root() * std::sqrt(-space.inner(c, c));
    double rmax = 0.0;
    for (const auto& v : mesh.vertices) rmax = std::max(rmax, space.distance(c, v));
    return {c, 1.1 * rmax};
}

// Riemannian volume of a geodesic ball.
inline double geodesic_ball_volume(const ModelSpace& space, double radius) {
    return sphere_area(space.dim() - 1) * v_ball(space.kappa(), space.dim(), radius);
}

// Point uniformly distributed in the geodesic ball w.r.t. Riemannian volume.
inline Vec uniform_in_ball(const ModelSpace& space, const BoundingBall& ball, Stream& rng) {
    const int n = space.dim();
    Vec x(n);
    do {
        for (int i = 0; i < n; ++i) x[i] = rng.normal();
    } while (x.norm() < 1e-12);
    x /= x.norm();
    const double u = rng.uniform();
    double rho;
    if (space.flat()) {
        rho = ball.radius * std::pow(u, 1.0 / n);
    } else {
        const CurvatureBound k = space.kappa();
        const double target = u * v_ball(k, n, ball.radius);
        auto f = [&](double s) { return v_ball(k, n, s) - target; };
        boost::uintmax_t iters = 200;
        const auto tol = boost::math::tools::eps_tolerance<double>(50);
        const auto br = boost::math::tools::toms748_solve(f, 0.0, ball.radius, -target,
                                                          v_ball(k, n, ball.radius) - target, tol, iters);
        rho = 0.5 * (br.first + br.second);
    }
    const Vec v = space.origin_tangent(rho * x);
    if (space.flat()) return ball.center + v;
    return space.exp(ball.center, space.transport(space.origin(), ball.center, v));
}

inline WindingEstimate integrate_winding(const RayCaster& caster, const FacetMesh& mesh, std::size_t samples,
                                         std::uint64_t seed, std::uint64_t key, int workers,
                                         const RayCaster* coarse = nullptr) {
    if (samples < 2) throw std::invalid_argument("winding integration needs at least 2 samples");
    const ModelSpace& space = mesh.space;
    const BoundingBall ball = bounding_ball(mesh);
    struct Block {
        long long s1 = 0, s2 = 0, s4 = 0, n = 0, bad = 0, d1 = 0, d2 = 0;
    };
    const auto blocks = run_blocks<Block>(samples, workers, seed, key, [&](Stream& rng, std::size_t b, std::size_t e) {
        Block acc;
        for (std::size_t i = b; i < e; ++i) {
            const Vec p = uniform_in_ball(space, ball, rng);
            const WindingResult w = winding_number(caster, p, rng);
            if (!w.reliable) {
                ++acc.bad;
                continue;
            }
            const long long v = w.value, v2 = v * v;
            if (coarse) {
                const WindingResult c = winding_number(*coarse, p, rng);
                if (c.reliable) {
                    acc.d1 += std::abs(static_cast<long long>(c.value)) - std::abs(v);
                    acc.d2 += static_cast<long long>(c.value) * c.value - v2;
                }
            }
            acc.s1 += std::abs(v);
            acc.s2 += v2;
            acc.s4 += v2 * v2;
            ++acc.n;
        }
        return acc;
    });
    Block tot;
    for (const auto& b : blocks) {
        tot.s1 += b.s1;
        tot.s2 += b.s2;
        tot.s4 += b.s4;
        tot.n += b.n;
        tot.bad += b.bad;
        tot.d1 += b.d1;
        tot.d2 += b.d2;
    }
    WindingEstimate out;
    out.samples = samples;
    out.unreliable = static_cast<std::size_t>(tot.bad);
    out.radius = ball.radius;
    out.center = ball.center;
    if (tot.bad * 1000 >= static_cast<long long>(samples))
        throw std::runtime_error("more than 0.1% of winding samples were unreliable");
    const double vol = geodesic_ball_volume(space, ball.radius);
    const double n = static_cast<double>(tot.n);
    const double m2 = tot.s2 / n, m1 = tot.s1 / n;
    // E|w|^2 = E w^2, so the variance of |w| reuses s2.
    out.w2 = vol * m2;
    out.w2_se = vol * std::sqrt(std::max(0.0, tot.s4 / n - m2 * m2) / (n - 1.0));
    out.w1 = vol * m1;
    out.w1_se = vol * std::sqrt(std::max(0.0, m2 - m1 * m1) / (n - 1.0));
    // Inscribed facets deviate by O(h^2), so the coarse mesh carries 4x the
    // error: extrapolate and keep the correction as the error estimate.
    const double c2 = vol * static_cast<double>(tot.d2) / n / 3.0;
    const double c1 = vol * static_cast<double>(tot.d1) / n / 3.0;
    out.w2 -= c2;
    out.w1 -= c1;
    out.w2_mesh = std::abs(c2);
    out.w1_mesh = std::abs(c1);
    return out;
}

// Draws atlas nodes with probability proportional to their weights.
class NodeSampler {
public:
    explicit NodeSampler(const QuadratureAtlas& atlas) : atlas_(atlas) {
        cdf_.reserve(atlas.nodes.size());
        double s = 0.0;
        for (const auto& nd : atlas.nodes) cdf_.push_back(s += nd.weight);
    }
    std::size_t operator()(Stream& rng) const {
        const double u = rng.uniform() * cdf_.back();
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        return std::min<std::size_t>(it - cdf_.begin(), cdf_.size() - 1);
    }
    const QuadratureAtlas& atlas() const { return atlas_; }

private:
    const QuadratureAtlas& atlas_;
    std::vector<double> cdf_;
};

// Geodesic through a weighted atlas node with the Santalo weight |<u, nu>|.
struct SantaloSample {
    OrientedGeodesic geodesic;
    double weight = 0.0;
    std::size_t node = 0;
};

inline SantaloSample santalo_sample(const NodeSampler& nodes, std::size_t node, Stream& rng) {
    const QuadratureAtlas& at = nodes.atlas();
    const AtlasNode& nd = at.nodes[node];
    const Vec u = random_direction(at.space, nd.s.point, rng);
    return {{nd.s.point, u, false}, std::abs(at.space.inner(u, nd.s.normal)), node};
}

struct Estimate {
    double value = 0.0, se = 0.0;
    std::size_t samples = 0;
    std::size_t resampled = 0;
};

inline constexpr int direction_attempts = 100;

namespace detail {

struct MomentBlock {
    double s1 = 0.0, s2 = 0.0;
    long long resampled = 0;
};

inline Estimate finish(const std::vector<MomentBlock>& blocks, std::size_t samples, double scale) {
    double s1 = 0.0, s2 = 0.0;
    long long res = 0;
    for (const auto& b : blocks) {
        s1 += b.s1;
        s2 += b.s2;
        res += b.resampled;
    }
    const double n = static_cast<double>(samples);
    const double mean = s1 / n;
    Estimate e;
    e.value = scale * mean;
    e.se = scale * std::sqrt(std::max(0.0, s2 / n - mean * mean) / (n - 1.0));
    e.samples = samples;
    e.resampled = static_cast<std::size_t>(res);
    return e;
}

inline int count_hits(const std::vector<RayCaster::Hit>& hits) { return static_cast<int>(hits.size()); }

}  // namespace detail

// Monte Carlo estimate of the measure of geodesics meeting the target, counted
// with intersection multiplicity. Geodesics are drawn through the source by
// Santalo sampling and every draw is divided by its number of source crossings,
// so the source must enclose the target.
inline Estimate crofton_estimate(const QuadratureAtlas& source, const RayCaster& source_mesh, const RayCaster& target,
                                 std::size_t samples, std::uint64_t seed, std::uint64_t key, int workers) {
    if (source.space != target.space() || source.space != source_mesh.space())
        throw std::invalid_argument("source and target must share a model space");
    if (source.m != source.space.dim() - 1) throw std::invalid_argument("Crofton source must be a hypersurface");
    if (samples < 2) throw std::invalid_argument("Crofton estimation needs at least 2 samples");
    const NodeSampler nodes(source);
    const auto blocks =
        run_blocks<detail::MomentBlock>(samples, workers, seed, key, [&](Stream& rng, std::size_t b, std::size_t e) {
            detail::MomentBlock acc;
            std::vector<RayCaster::Hit> hs, ht;
            for (std::size_t i = b; i < e; ++i) {
                const std::size_t node = nodes(rng);
                for (int attempt = 0;; ++attempt) {
                    if (attempt == direction_attempts) throw std::runtime_error("Crofton sampler kept hitting degenerate crossings");
                    const SantaloSample smp = santalo_sample(nodes, node, rng);
                    const OrientedGeodesic& g = smp.geodesic;
                    if (!source_mesh.cast(g.base, g.dir, Extent::full, hs) || !target.cast(g.base, g.dir, Extent::full, ht)) {
                        ++acc.resampled;
                        continue;
                    }
                    // A grazing geodesic may miss the inscribed source mesh; it still meets the source at the node.
                    const int ns = std::max(1, detail::count_hits(hs)) * source_mesh.multiplicity();
                    const int nt = detail::count_hits(ht) * target.multiplicity();
                    const double v = smp.weight * nt / ns;
                    acc.s1 += v;
                    acc.s2 += v * v;
                    break;
                }
            }
            return acc;
        });
    const double scale = sphere_area(source.space.dim() - 1) * source.volume();
    return detail::finish(blocks, samples, scale);
}

// Average over the hypersurface of the weighted opposite-sign hit count along
// rays leaving each point.
inline Estimate croke_average(const QuadratureAtlas& atlas, const RayCaster& mesh, std::size_t samples,
                              std::uint64_t seed, std::uint64_t key, int workers) {
    const int n = atlas.space.dim();
    if (n < 3) throw std::invalid_argument("croke_average requires n >= 3");
    if (atlas.m != n - 1) throw std::invalid_argument("croke_average requires a hypersurface");
    if (samples < 2) throw std::invalid_argument("croke_average needs at least 2 samples");
    const double p = static_cast<double>(n) / (n - 2);
    const NodeSampler nodes(atlas);
    const auto blocks =
        run_blocks<detail::MomentBlock>(samples, workers, seed, key, [&](Stream& rng, std::size_t b, std::size_t e) {
            detail::MomentBlock acc;
            std::vector<RayCaster::Hit> hits;
            for (std::size_t i = b; i < e; ++i) {
                const std::size_t node = nodes(rng);
                const AtlasNode& nd = atlas.nodes[node];
                for (int attempt = 0;; ++attempt) {
                    if (attempt == direction_attempts) throw std::runtime_error("ray sampler kept hitting degenerate crossings");
                    const Vec u = random_direction(atlas.space, nd.s.point, rng);
                    if (!mesh.cast(nd.s.point, u, Extent::ray, hits)) {
                        ++acc.resampled;
                        continue;
                    }
                    const double c = atlas.space.inner(u, nd.s.normal);
                    const int own = c > 0.0 ? 1 : -1;
                    int opposite = 0;
                    for (const auto& h : hits)
                        if (h.sign != own) ++opposite;
                    const double v = std::pow(std::abs(c), p) * opposite * mesh.multiplicity();
                    acc.s1 += v;
                    acc.s2 += v * v;
                    break;
                }
            }
            return acc;
        });
    return detail::finish(blocks, samples, croke_k(n) * sphere_area(n - 1));
}

}  // namespace geodex

#include <geodex/immersion.hpp>
#include <geodex/raycast.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <map>

using namespace geodex;

namespace {

const double pi = boost::math::constants::pi<double>();

ImmersionParams radius(double r) {
    ImmersionParams p;
    p.radius = r;
    return p;
}

Immersion circle(double kappa, double r, int k = 1) {
    return make_builtin(ModelSpace(2, kappa), "geodesic_circle", radius(r), k);
}

Immersion sphere(double kappa, double r, int k = 1) {
    return make_builtin(ModelSpace(3, kappa), "geodesic_sphere", radius(r), k);
}

Immersion perturbed(double kappa, double eps, int harmonic, int n = 3) {
    ImmersionParams p;
    p.radius = 1.0;
    p.epsilon = eps;
    p.harmonic = harmonic;
    return make_builtin(ModelSpace(n, kappa), n == 2 ? "perturbed_circle" : "perturbed_sphere", p);
}

}  // namespace

TEST(Builtin, UnitCircleLength) {
    EXPECT_NEAR(make_atlas(circle(0.0, 1.0), 2).volume(), 2 * pi, 1e-12);
}

TEST(Builtin, DoubledCircleLength) {
    const auto at = make_atlas(circle(-1.0, 0.8, 2), 2);
    EXPECT_EQ(at.multiplicity, 2);
    EXPECT_NEAR(at.volume(), 4 * pi * std::sinh(0.8), 1e-12);
}

TEST(Builtin, HyperbolicCircleLength) {
    EXPECT_NEAR(make_atlas(circle(-1.0, 1.3), 2).volume(), 2 * pi * std::sinh(1.3), 1e-11);
    EXPECT_NEAR(make_atlas(circle(-0.25, 1.0), 2).volume(), 2 * pi * sn(-0.25, 1.0), 1e-11);
}

TEST(Builtin, HyperbolicSphereArea) {
    const double s = std::sinh(1.0);
    EXPECT_NEAR(make_atlas(sphere(-1.0, 1.0), 3).volume(), 4 * pi * s * s, 1e-10);
}

TEST(Builtin, UnitSphereArea) { EXPECT_NEAR(make_atlas(sphere(0.0, 1.0), 3).volume(), 4 * pi, 1e-12); }

TEST(Builtin, EllipseCircumference) {
    // Ramanujan-free oracle: 1d adaptive quadrature of the speed.
    ImmersionParams p;
    p.axes = {1.0, 0.5};
    const auto at = make_atlas(make_builtin(ModelSpace(2, 0.0), "ellipse", p), 4);
    auto speed = [](double t) { return std::hypot(std::sin(t), 0.5 * std::cos(t)); };
    const double ref = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(speed, 0.0, 2 * pi, 10, 1e-15);
    EXPECT_NEAR(at.volume(), ref, 1e-12);
}

TEST(Builtin, PerturbationZeroMatchesSphere) {
    const auto a = make_atlas(perturbed(-1.0, 0.0, 3), 2), b = make_atlas(sphere(-1.0, 1.0), 2);
    ASSERT_EQ(a.nodes.size(), b.nodes.size());
    for (std::size_t i = 0; i < a.nodes.size(); ++i) {
        EXPECT_EQ(a.nodes[i].weight, b.nodes[i].weight);
        EXPECT_EQ(a.nodes[i].s.point, b.nodes[i].s.point);
        EXPECT_EQ(a.nodes[i].s.normal, b.nodes[i].s.normal);
    }
}

TEST(Builtin, RejectsInvalidParameters) {
    ImmersionParams p;
    p.epsilon = 0.5;
    EXPECT_THROW(make_builtin(ModelSpace(3, 0.0), "perturbed_sphere", p), std::invalid_argument);
    p = ImmersionParams{};
    p.axes = {1.0, 1.0, 1.4};
    EXPECT_THROW(make_builtin(ModelSpace(3, -1.0), "ellipsoid", p), std::invalid_argument);
    EXPECT_THROW(make_builtin(ModelSpace(2, 0.0), "space_curve", ImmersionParams{}), std::invalid_argument);
    EXPECT_THROW(make_builtin(ModelSpace(3, 0.0), "geodesic_circle", ImmersionParams{}), std::invalid_argument);
    EXPECT_THROW(make_builtin(ModelSpace(3, 0.0), "torus", ImmersionParams{}), std::invalid_argument);
    EXPECT_THROW(circle(0.0, 1.0, 0), std::invalid_argument);
}

TEST(Builtin, RankDeficiencyRejected) {
    const Immersion imm = sphere(0.0, 1.0);
    Vec x(3);
    x << 1, 0, 0;
    Vec d(3);
    d << 0, 1, 0;
    EXPECT_THROW(imm.push_forward(x, {d, d}), std::domain_error);
}

TEST(Atlas, FramesOrthonormalAndNormalsOriented) {
    for (const Immersion& imm : {sphere(-1.0, 1.0), perturbed(-1.0, 0.2, 3), perturbed(0.0, 0.25, 6)}) {
        const auto at = make_atlas(imm, 2);
        const ModelSpace& s = at.space;
        for (const auto& nd : at.nodes) {
            const auto& f = nd.s.frame;
            ASSERT_EQ(f.size(), 2u);
            EXPECT_NEAR(s.inner(f[0], f[0]), 1.0, 1e-10);
            EXPECT_NEAR(s.inner(f[1], f[1]), 1.0, 1e-10);
            EXPECT_NEAR(s.inner(f[0], f[1]), 0.0, 1e-10);
            EXPECT_NEAR(s.inner(nd.s.normal, f[0]), 0.0, 1e-10);
            if (!s.flat()) {
                EXPECT_NEAR(s.inner(nd.s.point, f[0]), 0.0, 1e-10);
            }
            EXPECT_GT(s.orientation(nd.s.point, {nd.s.normal, f[0], f[1]}), 0.0);
            // radial graphs are star-shaped, so the normal points away from the origin
            EXPECT_LT(s.inner(nd.s.normal, s.log(nd.s.point, s.origin())), 1e-12);
        }
    }
}

TEST(Atlas, CircleNormalPointsOutward) {
    const auto at = make_atlas(circle(0.0, 1.0), 0);
    for (const auto& nd : at.nodes) EXPECT_NEAR(nd.s.normal.dot(nd.s.point), 1.0, 1e-12);
}

TEST(Atlas, SpaceCurveCloses) {
    const auto at = make_atlas(make_builtin(ModelSpace(3, 0.0), "space_curve", ImmersionParams{}), 3);
    EXPECT_EQ(at.m, 1);
    EXPECT_GT(at.volume(), 0.0);
    EXPECT_EQ(at.nodes[0].s.normal.size(), 0);
}

TEST(Atlas, RefinementConvergesFast) {
    // Spacing halves per level; second order would shrink the error by 4 per
    // level. The rules are spectral, so after a pre-asymptotic plateau the
    // error must fall well below that envelope.
    const double ref = make_atlas(perturbed(-1.0, 0.2, 3), 6).volume();
    const double base = std::abs(make_atlas(perturbed(-1.0, 0.2, 3), 1).volume() - ref);
    for (int level = 3; level <= 4; ++level) {
        const double err = std::abs(make_atlas(perturbed(-1.0, 0.2, 3), level).volume() - ref);
        EXPECT_LE(err, base * std::pow(4.0, -(level - 1))) << "level " << level;
    }
    const double curve_ref = make_atlas(perturbed(0.0, 0.25, 5, 2), 6).volume();
    EXPECT_NEAR(make_atlas(perturbed(0.0, 0.25, 5, 2), 1).volume(), curve_ref, 1e-12 * curve_ref);
}

TEST(Mesh, EveryEdgeSharedWithOppositeOrientation) {
    const FacetMesh mesh = make_mesh(perturbed(-1.0, 0.2, 3), 12);
    std::map<std::pair<int, int>, int> edges;
    for (const auto& f : mesh.facets)
        for (int i = 0; i < 3; ++i) ++edges[{f[i], f[(i + 1) % 3]}];
    for (const auto& [e, count] : edges) {
        EXPECT_EQ(count, 1);
        EXPECT_EQ(edges.count({e.second, e.first}), 1u);
    }
}

TEST(Mesh, FarRaysCrossWithZeroTotal) {
    for (const Immersion& imm : {sphere(0.0, 1.0), perturbed(-1.0, 0.25, 6), circle(-1.0, 1.0)}) {
        const FacetMesh mesh = make_mesh(imm, imm.space().dim() == 2 ? 256 : 48);
        const RayCaster caster(mesh);
        const ModelSpace& s = mesh.space;
        Vec far(s.dim());
        far.setZero();
        far[0] = 5.0;
        const Vec p = s.point(far);
        std::vector<RayCaster::Hit> hits;
        for (int i = 0; i < 50; ++i) {
            Vec aim(s.dim());
            for (int j = 0; j < s.dim(); ++j) aim[j] = 0.3 * std::sin(1.7 * i + j);
            const Vec v = s.log(p, s.point(aim));
            ASSERT_TRUE(caster.cast(p, v, Extent::full, hits));
            int total = 0;
            for (const auto& h : hits) total += h.sign;
            EXPECT_EQ(total, 0);
            EXPECT_GE(hits.size(), 2u);
        }
    }
}

TEST(Mesh, CenterRaysLeaveOutward) {
    const FacetMesh mesh = make_mesh(sphere(-1.0, 1.0), 32);
    const RayCaster caster(mesh);
    const ModelSpace& s = mesh.space;
    std::vector<RayCaster::Hit> hits;
    for (int i = 0; i < 100; ++i) {
        Vec d(3);
        d << std::cos(0.3 * i + 0.1), std::sin(0.3 * i + 0.1) * std::cos(0.11 * i + 0.2),
            std::sin(0.3 * i + 0.1) * std::sin(0.11 * i + 0.2);
        ASSERT_TRUE(caster.cast(s.origin(), s.origin_tangent(d), Extent::ray, hits)) << i;
        ASSERT_EQ(hits.size(), 1u);
        EXPECT_EQ(hits[0].sign, 1);
    }
}

TEST(Mesh, CasterAgreesWithSimplexIntersection) {
    const FacetMesh mesh = make_mesh(perturbed(-1.0, 0.2, 3), 10);
    const RayCaster caster(mesh);
    const ModelSpace& s = mesh.space;
    std::vector<RayCaster::Hit> hits;
    for (int i = 0; i < 40; ++i) {
        Vec x(3);
        x << 0.2 * std::sin(i), 0.3 * std::cos(2.0 * i), 0.1 * i / 40.0;
        const Vec p = s.point(x);
        Vec d(3);
        d << std::cos(0.7 * i + 0.1), std::sin(0.7 * i + 0.1) * std::cos(1.3 * i + 0.2),
            std::sin(0.7 * i + 0.1) * std::sin(1.3 * i + 0.2);
        const Vec v = s.transport(s.origin(), p, s.origin_tangent(d));
        ASSERT_TRUE(caster.cast(p, v, Extent::full, hits)) << i;
        int brute = 0, brute_count = 0;
        for (std::size_t f = 0; f < mesh.facets.size(); ++f) {
            const auto r = geodesic_simplex_intersections(s, p, v, mesh.simplex(f), Extent::full);
            ASSERT_FALSE(r.degenerate);
            for (const auto& c : r.crossings) {
                brute += c.sign;
                ++brute_count;
            }
        }
        int fast = 0;
        for (const auto& h : hits) fast += h.sign;
        EXPECT_EQ(fast, brute);
        EXPECT_EQ(static_cast<int>(hits.size()), brute_count);
    }
}

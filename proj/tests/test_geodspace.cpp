#include <geodex/geodspace.hpp>
#include <geodex/immersion.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace geodex;

namespace {

const double pi = boost::math::constants::pi<double>();

Immersion sphere(double kappa, double r, int k = 1) {
    ImmersionParams p;
    p.radius = r;
    return make_builtin(ModelSpace(3, kappa), "geodesic_sphere", p, k);
}

Immersion circle(double kappa, double r, int k = 1) {
    ImmersionParams p;
    p.radius = r;
    return make_builtin(ModelSpace(2, kappa), "geodesic_circle", p, k);
}

Immersion perturbed(double kappa, double eps, int harmonic) {
    ImmersionParams p;
    p.epsilon = eps;
    p.harmonic = harmonic;
    return make_builtin(ModelSpace(3, kappa), "perturbed_sphere", p);
}

Vec coords(double a, double b, double c) {
    Vec v(3);
    v << a, b, c;
    return v;
}

}  // namespace

TEST(GeodesicChart, RoundTripRecoversGeodesic) {
    for (double k : {0.0, -1.0}) {
        const ModelSpace s(3, k);
        Stream rng(11, 0, 0);
        for (int i = 0; i < 10000; ++i) {
            Vec x(3), y(3);
            for (int j = 0; j < 3; ++j) {
                x[j] = rng.normal();
                y[j] = rng.normal();
            }
            const Vec base = s.point(x), p = s.point(0.5 * y);
            const OrientedGeodesic g{base, random_direction(s, base, rng), false};
            const GeodesicChart c = to_chart(s, g, p);
            ASSERT_NEAR(s.inner(c.u, c.v), 0.0, 1e-9);
            const OrientedGeodesic h = from_chart(s, c);
            // h.base lies on g and the directions agree there
            const double t = foot_parameter(s, g, h.base);
            const Vec on_g = geodesic_point(s, g, t);
            ASSERT_LT(s.distance(on_g, h.base), 1e-8) << i;
            ASSERT_LT(s.norm(geodesic_velocity(s, g, t) - h.dir), 1e-8) << i;
        }
    }
}

TEST(GeodesicChart, FootIsNearestPoint) {
    const ModelSpace s(3, -1.0);
    Stream rng(12, 0, 0);
    const Vec base = s.point(coords(0.2, -0.4, 0.1));
    const OrientedGeodesic g{base, random_direction(s, base, rng), false};
    const Vec p = s.point(coords(1.0, 0.3, -0.5));
    const double t = foot_parameter(s, g, p);
    const double d0 = s.distance(p, geodesic_point(s, g, t));
    for (double dt : {-1e-3, 1e-3}) EXPECT_GT(s.distance(p, geodesic_point(s, g, t + dt)), d0);
}

TEST(StreamKey, PurposesSeparate) {
    EXPECT_NE(stream_key(StreamPurpose::winding, 5), stream_key(StreamPurpose::crofton, 5));
    EXPECT_NE(stream_key(StreamPurpose::winding, 5), stream_key(StreamPurpose::winding, 6));
}

TEST(Winding, InsideOutsideAndMultiplicity) {
    for (int k : {1, 2}) {
        const FacetMesh mesh = make_mesh(sphere(-1.0, 1.0, k), 24);
        const RayCaster caster(mesh);
        Stream rng(13, 0, 0);
        const ModelSpace& s = mesh.space;
        EXPECT_EQ(winding_number(caster, s.point(coords(0.1, 0.2, -0.1)), rng).value, k);
        EXPECT_EQ(winding_number(caster, s.point(coords(1.5, 0.2, -0.1)), rng).value, 0);
    }
}

TEST(Winding, TwiceTraversedCircle) {
    const FacetMesh mesh = make_mesh(circle(0.0, 1.0, 2), 64);
    const RayCaster caster(mesh);
    Stream rng(14, 0, 0);
    Vec p(2);
    p << 0.3, -0.2;
    EXPECT_EQ(winding_number(caster, p, rng).value, 2);
}

TEST(Winding, FlatBallVolume) {
    const FacetMesh mesh = make_mesh(sphere(0.0, 1.0), 96);
    const RayCaster caster(mesh);
    const auto est = integrate_winding(caster, mesh, 100000, 7, stream_key(StreamPurpose::winding, 0), 1);
    // inscribed facets lose O(h^2) volume; the oracle uses the same ring count
    const double exact = 4 * pi / 3;
    EXPECT_NEAR(est.w2, exact, 3 * est.w2_se + 2e-3 * exact);
    EXPECT_DOUBLE_EQ(est.w1, est.w2);
    EXPECT_EQ(est.unreliable, 0u);
}

TEST(Winding, MeshCorrectionMatchesPolyhedronVolume) {
    // exact polyhedron volume from signed tetrahedra against the centre
    const Immersion imm = sphere(0.0, 1.0);
    const FacetMesh fine = make_mesh(imm, 48), coarse = make_mesh(imm, 24);
    double poly = 0.0;
    for (const auto& f : fine.facets) {
        const Eigen::Vector3d a = fine.vertices[f[0]], b = fine.vertices[f[1]], c = fine.vertices[f[2]];
        poly += a.dot(b.cross(c)) / 6.0;
    }
    const RayCaster fc(fine), cc(coarse);
    const auto est = integrate_winding(fc, fine, 100000, 10, stream_key(StreamPurpose::winding, 0), 1, &cc);
    const double deficit = 4 * pi / 3 - poly;
    EXPECT_NEAR(est.w2_mesh, deficit, 0.2 * deficit);
    EXPECT_NEAR(est.w2, 4 * pi / 3, 3 * est.w2_se + 0.2 * deficit);
}

TEST(Winding, HyperbolicBallVolume) {
    const FacetMesh mesh = make_mesh(sphere(-1.0, 1.0), 96);
    const RayCaster caster(mesh);
    const auto est = integrate_winding(caster, mesh, 100000, 8, stream_key(StreamPurpose::winding, 0), 1);
    const double exact = pi * (std::sinh(2.0) - 2.0);
    EXPECT_NEAR(est.w2, exact, 3 * est.w2_se + 2e-3 * exact);
}

TEST(Winding, MultiplicityScalesMoments) {
    const std::uint64_t key = stream_key(StreamPurpose::winding, 0);
    const FacetMesh one = make_mesh(sphere(-1.0, 1.0, 1), 32), two = make_mesh(sphere(-1.0, 1.0, 2), 32);
    const auto a = integrate_winding(RayCaster(one), one, 20000, 9, key, 1);
    const auto b = integrate_winding(RayCaster(two), two, 20000, 9, key, 1);
    EXPECT_NEAR(b.w2, 4 * a.w2, 1e-12 * b.w2);
    EXPECT_NEAR(b.w1, 2 * a.w1, 1e-12 * b.w1);
}

TEST(Winding, IndependentOfWorkerCount) {
    const FacetMesh mesh = make_mesh(perturbed(-1.0, 0.2, 3), 24);
    const RayCaster caster(mesh);
    const auto key = stream_key(StreamPurpose::winding, 3);
    const auto a = integrate_winding(caster, mesh, 10000, 21, key, 1);
    const auto b = integrate_winding(caster, mesh, 10000, 21, key, 4);
    EXPECT_EQ(a.w2, b.w2);
    EXPECT_EQ(a.w2_se, b.w2_se);
}

TEST(Crofton, SphereMeasure) {
    // measure of geodesics meeting a closed hypersurface, counted with
    // multiplicity: 2 * |B^{n-1}| * Vol(M)
    for (double k : {0.0, -1.0}) {
        const Immersion target = sphere(k, 1.0), source = sphere(k, 1.2);
        const auto at = make_atlas(source, 3);
        const RayCaster sc(make_mesh(source, 96)), tc(make_mesh(target, 96));
        const auto est = crofton_estimate(at, sc, tc, 100000, 3, stream_key(StreamPurpose::crofton, 0), 1);
        const double area = k == 0.0 ? 4 * pi : 4 * pi * std::sinh(1.0) * std::sinh(1.0);
        const double expected = 2 * pi * area;
        EXPECT_NEAR(est.value, expected, 3 * est.se + 3e-3 * expected) << "kappa " << k;
    }
}

TEST(Crofton, SourceIndependence) {
    const Immersion target = sphere(0.0, 0.8);
    ImmersionParams p;
    p.radius = 1.3;
    p.epsilon = 0.15;
    p.harmonic = 3;
    const Immersion bumpy = make_builtin(ModelSpace(3, 0.0), "perturbed_sphere", p), round = sphere(0.0, 1.3);
    const RayCaster tc(make_mesh(target, 96));
    const auto a = crofton_estimate(make_atlas(round, 3), RayCaster(make_mesh(round, 96)), tc, 50000, 4,
                                    stream_key(StreamPurpose::crofton, 0), 1);
    const auto b = crofton_estimate(make_atlas(bumpy, 3), RayCaster(make_mesh(bumpy, 96)), tc, 50000, 4,
                                    stream_key(StreamPurpose::crofton, 1), 1);
    EXPECT_NEAR(a.value, b.value, 3 * std::hypot(a.se, b.se));
}

TEST(Crofton, TargetMultiplicityDoubles) {
    const Immersion source = sphere(0.0, 1.2);
    const auto at = make_atlas(source, 3);
    const RayCaster sc(make_mesh(source, 48));
    const auto key = stream_key(StreamPurpose::crofton, 0);
    const auto a = crofton_estimate(at, sc, RayCaster(make_mesh(sphere(0.0, 1.0, 1), 48)), 5000, 5, key, 1);
    const auto b = crofton_estimate(at, sc, RayCaster(make_mesh(sphere(0.0, 1.0, 2), 48)), 5000, 5, key, 1);
    EXPECT_NEAR(b.value, 2 * a.value, 1e-12 * b.value);
}

TEST(CrokeAverage, ConvexSphereIsOne) {
    for (double k : {0.0, -1.0}) {
        const Immersion imm = sphere(k, 1.0);
        const auto est = croke_average(make_atlas(imm, 3), RayCaster(make_mesh(imm, 96)), 50000, 6,
                                       stream_key(StreamPurpose::croke, 0), 1);
        EXPECT_NEAR(est.value, 1.0, 3 * est.se + 2e-3) << "kappa " << k;
    }
}

TEST(CrokeAverage, NonConvexExceedsOne) {
    const Immersion imm = perturbed(-1.0, 0.2, 6);
    const auto est = croke_average(make_atlas(imm, 3), RayCaster(make_mesh(imm, 96)), 50000, 6,
                                   stream_key(StreamPurpose::croke, 0), 1);
    EXPECT_GT(est.value - 3 * est.se, 1.0);
}

TEST(CrokeAverage, RejectsPlane) {
    const Immersion imm = circle(0.0, 1.0);
    EXPECT_THROW(croke_average(make_atlas(imm, 1), RayCaster(make_mesh(imm, 64)), 100, 1, 0, 1),
                 std::invalid_argument);
}

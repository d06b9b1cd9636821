// One PASS/FAIL line per acceptance criterion. Exit status is the number of failures.
#include <geodex/presets_data.hpp>
#include <geodex/runner.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

using namespace geodex;

namespace {

const double pi = boost::math::constants::pi<double>();

// Pinned tolerances.
constexpr double tol_equality = 2e-3;
constexpr double tol_stokes = 5e-3;
constexpr double tol_sq_int = 1e-3;
constexpr double tol_transfer_excess = 1e-12;
constexpr double tol_transfer_equality = 1e-10;
constexpr double tol_identity = 1e-12;
constexpr double sigmas = 3.0;
constexpr std::size_t equality_samples = 1000000;
constexpr std::uint64_t seed = 2024;

struct Check {
    std::vector<std::string> lines;
    bool ok = true;

    void expect(bool cond, const std::string& what) {
        ok = ok && cond;
        lines.push_back(std::string(cond ? "ok   " : "FAIL ") + what);
    }
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

Immersion ball(int n, double kappa, int k = 1) {
    ImmersionParams p;
    return make_builtin(ModelSpace(n, kappa), n == 2 ? "geodesic_circle" : "geodesic_sphere", p, k);
}

Immersion bumpy(int n, double kappa, double eps, int harmonic) {
    ImmersionParams p;
    p.epsilon = eps;
    p.harmonic = harmonic;
    return make_builtin(ModelSpace(n, kappa), n == 2 ? "perturbed_circle" : "perturbed_sphere", p);
}

VerifyOptions options(double K, std::size_t samples, std::uint64_t salt) {
    VerifyOptions o;
    o.K_bound = K;
    o.samples = samples;
    o.level = 4;
    o.seed = seed;
    o.salt = salt;
    return o;
}

void expect_equality(Check& c, const std::string& label, const InequalityReport& r) {
    c.expect(std::abs(r.normalized_gap) <= tol_equality && r.verdict == Verdict::equality,
             label + " " + r.theorem + fmt(": gap/rhs = %+.2e, verdict ", r.normalized_gap) + verdict_name(r.verdict));
}

void expect_strict(Check& c, const std::string& label, const InequalityReport& r) {
    c.expect(r.gap > sigmas * r.combined_error && r.verdict == Verdict::strict,
             label + " " + r.theorem + fmt(": gap = %.4g > 3 x %.3g", r.gap, r.combined_error));
}

void expect_agreement(Check& c, const std::string& label, const InequalityReport& r) {
    c.expect(std::abs(r.gap) <= sigmas * r.combined_error,
             label + " " + r.theorem + fmt(": |gap| = %.3g <= 3 x %.3g", std::abs(r.gap), r.combined_error));
}

Check a1() {
    Check c;
    const auto circle = verify_thm1(ball(2, 0.0), options(0.0, equality_samples, 1));
    c.expect(std::abs(circle.rhs.value - 4 * pi * pi) <= 1e-10, fmt("circle rhs = %.12f vs (2 pi)^2", circle.rhs.value));
    expect_equality(c, "unit circle", circle);
    const auto sphere = verify_thm1(ball(3, 0.0), options(0.0, equality_samples, 2));
    c.expect(std::abs(sphere.rhs.value - 16 * pi * pi) <= sphere.rhs.bias + 1e-8,
             fmt("sphere rhs = %.10f vs 16 pi^2 = %.10f", sphere.rhs.value, 16 * pi * pi));
    expect_equality(c, "unit sphere", sphere);
    // Monte Carlo volume at the criterion's sample size
    const auto small = verify_thm1(ball(3, 0.0), options(0.0, 200000, 3));
    const double w2 = small.lhs.value / (3 * 4 * pi), se = small.lhs.se / (3 * 4 * pi), bias = small.lhs.bias / (3 * 4 * pi);
    c.expect(std::abs(w2 - 4 * pi / 3) <= sigmas * se + bias,
             fmt("int w^2 = %.5f vs 4pi/3 within 3 SE (SE %.1e)", w2, se));
    return c;
}

Check a2() {
    Check c;
    expect_equality(c, "H2 circle K=-1", verify_thm1b(ball(2, -1.0), options(-1.0, equality_samples, 1)));
    expect_equality(c, "H3 sphere K=-1", verify_thm1b(ball(3, -1.0), options(-1.0, equality_samples, 2)));
    expect_strict(c, "H2 circle K=-0.5", verify_thm1b(ball(2, -1.0), options(-0.5, 200000, 3)));
    expect_strict(c, "H3 sphere K=-0.5", verify_thm1b(ball(3, -1.0), options(-0.5, 200000, 4)));
    return c;
}

Check a3() {
    Check c;
    for (double k : {0.0, -1.0}) {
        const std::string label = k == 0.0 ? "R3 sphere" : "H3 sphere";
        const auto total = consistency_crofton(ball(3, k), options(0.0, 100000, 1));
        expect_agreement(c, label, total);
        const double area = k == 0.0 ? 4 * pi : 4 * pi * std::sinh(1.0) * std::sinh(1.0);
        c.expect(std::abs(total.rhs.value - 2 * pi * area) <= 1e-3 * 2 * pi * area,
                 label + fmt(" 2 B_2 Vol(M) = %.5f vs %.5f", total.rhs.value, 2 * pi * area));
        expect_agreement(c, label, consistency_crofton_sources(ball(3, k), options(0.0, 100000, 2)));
    }
    return c;
}

Check a4() {
    Check c;
    ImmersionParams ell;
    ell.axes = {1.0, 1.0, 1.4};
    const auto flat = consistency_hyp_main(make_builtin(ModelSpace(3, 0.0), "ellipsoid", ell), options(0.0, equality_samples, 1));
    expect_agreement(c, "ellipsoid (1,1,1.4)", flat);
    c.expect(std::abs(flat.rhs.value - 4 * pi * 1.4 / 3) <= 1e-3 * flat.rhs.value,
             fmt("ellipsoid quadrature volume %.6f vs 4 pi 1.4/3 = %.6f", flat.rhs.value, 4 * pi * 1.4 / 3));
    expect_agreement(c, "H3 perturbed sphere", consistency_hyp_main(bumpy(3, -1.0, 0.15, 3), options(0.0, equality_samples, 2)));
    return c;
}

Check a5() {
    Check c;
    const auto one = verify_howard(ball(2, -1.0, 1), options(-1.0, equality_samples, 1));
    const auto two = verify_howard(ball(2, -1.0, 2), options(-1.0, equality_samples, 1));
    expect_equality(c, "k=1", one);
    expect_equality(c, "k=2", two);
    c.expect(std::abs(two.rhs.value - 4 * one.rhs.value) <= 1e-9 * two.rhs.value &&
                 std::abs(two.lhs.value - 4 * one.lhs.value) <= 1e-9 * two.lhs.value,
             "both sides scale by k^2");
    expect_strict(c, "perturbed circle", verify_howard(bumpy(2, -1.0, 0.2, 3), options(-1.0, equality_samples, 2)));
    return c;
}

void expect_margin(Check& c, const std::string& label, const InequalityReport& r) {
    const double margin = r.extras.at(0).second, err = r.extras.at(1).second;
    c.expect(margin > sigmas * err, label + fmt(" classical margin %.4f > 3 x %.2g", margin, err));
}

Check a6() {
    Check c;
    const auto round = verify_yau(ball(3, -1.0), options(-1.0, equality_samples, 1));
    expect_equality(c, "H3 sphere", round);
    expect_margin(c, "H3 sphere", round);
    const auto wavy = verify_yau(bumpy(3, -1.0, 0.2, 3), options(-1.0, 200000, 2));
    expect_strict(c, "H3 perturbed", wavy);
    expect_margin(c, "H3 perturbed", wavy);
    return c;
}

Check a7() {
    Check c;
    const auto round = verify_croke_type(ball(3, -1.0), options(0.0, 100000, 1));
    const double a = round.extras.at(0).second, se = round.extras.at(1).second;
    c.expect(std::abs(a - 1.0) <= sigmas * se, fmt("convex A(f) = %.4f within 3 SE (%.1e) of 1", a, se));
    c.expect(round.verdict == Verdict::strict || round.verdict == Verdict::equality,
             "inequality holds: " + verdict_name(round.verdict));
    const auto wavy = verify_croke_type(bumpy(3, -1.0, 0.2, 6), options(0.0, 100000, 2));
    const double aw = wavy.extras.at(0).second, sew = wavy.extras.at(1).second;
    c.expect(aw - sigmas * sew > 1.0, fmt("perturbed A(f) = %.4f > 1 + 3 x %.1e", aw, sew));
    c.expect(wavy.verdict != Verdict::violation, "perturbed inequality holds: " + verdict_name(wavy.verdict));
    const double lhs = croke_c(4) * ball_volume(4), rhs = std::pow(sphere_area(3), 4.0 / 3.0);
    const double closed = 2 * pi * pi * std::pow(4 / (pi * pi), 2.0 / 3.0) * (pi * pi / 2);
    c.expect(std::abs(lhs - rhs) <= tol_identity * rhs && std::abs(closed - std::pow(2 * pi * pi, 4.0 / 3.0)) <= tol_identity * rhs,
             fmt("C_4 |B^4| = %.15g, Vol(S^3)^(4/3) = %.15g", lhs, rhs));
    return c;
}

Check a8() {
    Check c;
    const auto circle = consistency_stokes(ball(2, 0.0), options(0.0, 1000, 1));
    c.expect(std::abs(circle.lhs.value - 2 * pi * pi) <= tol_stokes * 2 * pi * pi &&
                 std::abs(circle.rhs.value - 2 * pi * pi) <= tol_stokes * 2 * pi * pi,
             fmt("circle: %.10f and %.10f vs 2 pi^2", circle.lhs.value, circle.rhs.value));
    const auto sphere = consistency_stokes(ball(3, -1.0), options(0.0, 1000, 2));
    c.expect(std::abs(sphere.normalized_gap) <= tol_stokes, fmt("H3 sphere: relative gap %.2e", sphere.normalized_gap));
    return c;
}

Check a9() {
    Check c;
    const ModelSpace s(3, -1.0);
    Stream rng(seed, 9, 0);
    auto coords = [&] {
        Vec x(3);
        for (int i = 0; i < 3; ++i) x[i] = rng.normal();
        return x;
    };
    double excess = -1.0, equality = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const SurfaceSample x{s.point(coords()), {}, Vec(), 0.0}, y{s.point(coords()), {}, Vec(), 0.0};
        const ChordFrame f = chord_frame(s, x, y);
        for (int dim : {1, 2}) {
            std::vector<Vec> basis;
            while (static_cast<int>(basis.size()) < dim) {
                Vec v = s.transport(s.origin(), y.point, s.origin_tangent(coords()));
                v -= s.inner(v, f.dir_y) * f.dir_y;
                for (const auto& b : basis) v -= s.inner(v, b) * b;
                if (s.norm(v) < 1e-6) continue;
                basis.push_back(v / s.norm(v));
            }
            const double det = transfer_map(s, f, basis, basis).det;
            for (double K : {-1.0, -0.5, -0.1}) {
                const double bound = std::pow(sn(K, f.r), -dim);
                excess = std::max(excess, det - bound);
                if (K == -1.0) equality = std::max(equality, std::abs(det - bound) / bound);
            }
        }
    }
    c.expect(excess <= tol_transfer_excess, fmt("max det - 1/sn_K^dim = %.2e", excess));
    c.expect(equality <= tol_transfer_equality, fmt("K = -1 relative deviation %.2e", equality));
    return c;
}

Check a10() {
    Check c;
    const Immersion disk = ball(2, 0.0);
    c.expect(curve_nodes(4) == 512, "level 4 uses 512 nodes");
    const auto q = chord_integral(disk, {Integrand::one_minus_grad_r_sq}, {4, 1, 1e-6});
    const double rhs = q.value / 6.0, lhs = pi * pi;
    c.expect(std::abs(rhs - lhs) / rhs <= tol_sq_int, fmt("(1/6) iint = %.12f vs pi^2 = %.12f", rhs, lhs));
    const auto r = verify_sq_int(disk, options(0.0, equality_samples, 1));
    expect_agreement(c, "Monte Carlo (int |w|)^2", r);
    return c;
}

Check a11() {
    Check c;
    for (const auto& [name, text] : presets()) {
        if (name != "ball-equality-suite") continue;
        json tree = config::parse_text(std::string(text));
        tree["defaults"]["samples"] = 20000;
        tree["defaults"]["level"] = 2;
        std::string reports[2];
        int i = 0;
        for (int w : {1, 4}) {
            tree["workers"] = w;
            reports[i++] = execute(validate_config(tree)).report.dump(2);
        }
        c.expect(reports[0] == reports[1], std::string(name) + ": report bytes identical at workers 1 and 4");
    }
    return c;
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Check()>>> criteria{
        {"A1  thm1 equality, flat", a1},
        {"A2  thm1b equality and weaker-bound strictness", a2},
        {"A3  Crofton measure and source independence", a3},
        {"A4  winding volume vs quadrature", a4},
        {"A5  Howard with multiplicity", a5},
        {"A6  quantitative Yau", a6},
        {"A7  Croke-type average", a7},
        {"A8  Stokes identity", a8},
        {"A9  Jacobi transfer bound", a9},
        {"A10 squared-winding equality", a10},
        {"A11 determinism across workers", a11},
    };
    int failures = 0;
    for (const auto& [name, run] : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Check c;
        try {
            c = run();
        } catch (const std::exception& e) {
            c.expect(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s  %-48s (%.1f s)\n", c.ok ? "PASS" : "FAIL", name, secs);
        for (const auto& l : c.lines) std::printf("      %s\n", l.c_str());
        std::fflush(stdout);
        failures += !c.ok;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures;
}

#pragma once

#include "geodspace.hpp"
#include "secant.hpp"

#include <cmath>
#include <cstdint>
#include <future>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace geodex {

enum class Verdict { equality, strict, violation, inconclusive, consistent, inconsistent };

inline std::string verdict_name(Verdict v) {
    switch (v) {
        case Verdict::equality: return "equality";
        case Verdict::strict: return "strict";
        case Verdict::violation: return "violation";
        case Verdict::inconclusive: return "inconclusive";
        case Verdict::consistent: return "consistent";
        case Verdict::inconsistent: return "inconsistent";
    }
    return "unknown";
}

// One side of an inequality. `se` is a Monte Carlo standard error, `bias` a
// deterministic discretization bound (two-level differences); `coarse` is the
// value with every quadrature input taken one level down.
struct Side {
    std::string expression;
    std::string pipeline;
    double value = 0.0;
    double coarse = 0.0;
    double se = 0.0;
    double bias = 0.0;
    std::size_t samples = 0;
    std::uint64_t stream = 0;
    int level = -1;
    bool converged = true;
};

struct InequalityReport {
    std::string theorem;
    bool consistency = false;
    double K_bound = 0.0;
    double tol_eq = 0.0;
    Side lhs, rhs;
    double gap = 0.0;
    double normalized_gap = 0.0;
    double normalized_gap_coarse = 0.0;
    double combined_error = 0.0;
    Verdict verdict = Verdict::inconclusive;
    std::vector<std::pair<std::string, double>> extras;
    std::string note;
};

struct VerifyOptions {
    double K_bound = 0.0;
    std::size_t samples = 200000;
    double tol_eq = 2e-3;
    int level = 4;
    int mesh_resolution = 0;  // 0 picks a default per dimension
    std::uint64_t seed = 0;
    std::uint64_t salt = 0;
    int workers = 1;
    double quadrature_tolerance = 1e-3;
};

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

inline int default_mesh_resolution(const Immersion& imm) { return imm.space().dim() == 2 ? 2048 : 128; }

namespace detail {

inline Side scaled(Side s, double c) {
    s.value *= c;
    s.coarse *= c;
    s.se *= std::abs(c);
    s.bias *= std::abs(c);
    return s;
}

// Sum of two sides whose noise may be correlated; errors add linearly.
inline Side sum(const Side& a, const Side& b, std::string expr) {
    Side s = a;
    s.expression = std::move(expr);
    s.value = a.value + b.value;
    s.coarse = a.coarse + b.coarse;
    s.se = a.se + b.se;
    s.bias = a.bias + b.bias;
    s.samples = std::max(a.samples, b.samples);
    s.level = std::max(a.level, b.level);
    s.converged = a.converged && b.converged;
    if (a.pipeline != b.pipeline) s.pipeline = a.pipeline + "+" + b.pipeline;
    return s;
}

// Power of a positive side with first-order error propagation.
inline Side power(Side s, double p) {
    const double v = s.value;
    const double d = std::abs(p * std::pow(v, p - 1.0));
    s.value = std::pow(v, p);
    s.coarse = std::pow(s.coarse, p);
    s.se *= d;
    s.bias *= d;
    return s;
}

inline Side product(const Side& a, const Side& b, std::string expr) {
    Side s = a;
    s.expression = std::move(expr);
    s.value = a.value * b.value;
    s.coarse = a.coarse * b.coarse;
    s.se = std::abs(a.se * b.value) + std::abs(b.se * a.value);
    s.bias = std::abs(a.bias * b.value) + std::abs(b.bias * a.value);
    s.samples = std::max(a.samples, b.samples);
    s.level = std::max(a.level, b.level);
    s.converged = a.converged && b.converged;
    if (a.pipeline != b.pipeline) s.pipeline = a.pipeline + "+" + b.pipeline;
    return s;
}

inline Side chord_side(const ChordIntegral& c, const ChordOptions& o, std::string expr) {
    Side s;
    s.expression = std::move(expr);
    s.pipeline = "quadrature";
    s.value = c.value;
    s.coarse = c.coarse;
    s.bias = c.error;
    s.level = o.level;
    s.converged = c.converged;
    return s;
}

inline void require_hypersurface(const Immersion& imm, const std::string& id) {
    if (!imm.hypersurface()) throw ConfigError(id + " requires a closed hypersurface");
}

inline void require_bound(const Immersion& imm, const VerifyOptions& o, const std::string& id, bool strictly_negative) {
    const double kappa = imm.space().kappa().value();
    if (o.K_bound > 0.0) throw ConfigError(id + ": K_bound must be <= 0");
    if (kappa > o.K_bound) throw ConfigError(id + ": model curvature must not exceed K_bound");
    if (strictly_negative && !(o.K_bound < 0.0)) throw ConfigError(id + " requires K_bound < 0");
}

// Lazily evaluated ingredients shared by the theorem checks of one immersion.
class Ingredients {
public:
    Ingredients(const Immersion& imm, const VerifyOptions& o) : imm_(imm), o_(o) {
        if (o.level < 1 || o.level > 6) throw ConfigError("quadrature level must be in [1, 6]");
        if (o.samples < 100) throw ConfigError("samples must be at least 100");
        if (!(o.tol_eq > 0.0)) throw ConfigError("tol_eq must be positive");
    }

    ChordOptions chord_options() const { return {o_.level, o_.workers, o_.quadrature_tolerance}; }

    std::vector<Side> chords(const std::vector<IntegrandSpec>& specs, const std::vector<std::string>& names) const {
        const ChordOptions co = chord_options();
        const auto r = chord_integrals(imm_, specs, co);
        std::vector<Side> out;
        for (std::size_t k = 0; k < r.size(); ++k) out.push_back(chord_side(r[k], co, names[k]));
        return out;
    }

    Side chord(const IntegrandSpec& spec, const std::string& name) const { return chords({spec}, {name}).front(); }

    const WindingEstimate& winding() const {
        if (!winding_done_) {
            const int res = o_.mesh_resolution > 0 ? o_.mesh_resolution : default_mesh_resolution(imm_);
            const FacetMesh fine = make_mesh(imm_, res);
            const FacetMesh coarse = make_mesh(imm_, res / 2);
            const RayCaster fc(fine), cc(coarse);
            winding_ = integrate_winding(fc, fine, o_.samples, o_.seed, winding_key(), o_.workers, &cc);
            winding_done_ = true;
        }
        return winding_;
    }

    Side w2() const {
        const auto& w = winding();
        return mc_side("int w^2", w.w2, w.w2_se, w.w2_mesh);
    }
    Side w1() const {
        const auto& w = winding();
        return mc_side("int |w|", w.w1, w.w1_se, w.w1_mesh);
    }

    Side volume() const {
        const double fine = make_atlas(imm_, o_.level).volume();
        const double coarse = make_atlas(imm_, o_.level - 1).volume();
        Side s;
        s.expression = "Vol(M)";
        s.pipeline = "quadrature";
        s.value = fine;
        s.coarse = coarse;
        s.bias = std::abs(fine - coarse) + 1e-14 * fine;
        s.level = o_.level;
        return s;
    }

    Estimate croke() const {
        const int res = o_.mesh_resolution > 0 ? o_.mesh_resolution : default_mesh_resolution(imm_);
        const RayCaster mesh(make_mesh(imm_, res));
        return croke_average(make_atlas(imm_, o_.level), mesh, o_.samples, o_.seed, croke_key(), o_.workers);
    }

    std::uint64_t winding_key() const { return stream_key(StreamPurpose::winding, o_.salt); }
    std::uint64_t croke_key() const { return stream_key(StreamPurpose::croke, o_.salt); }
    std::uint64_t crofton_key(std::uint64_t sub = 0) const {
        return stream_key(StreamPurpose::crofton, (o_.salt << 4) | sub);
    }

    const Immersion& immersion() const { return imm_; }
    const VerifyOptions& options() const { return o_; }

private:
    Side mc_side(const char* expr, double v, double se, double mesh) const {
        Side s;
        s.expression = expr;
        s.pipeline = "monte_carlo";
        s.value = s.coarse = v;
        s.se = se;
        s.bias = mesh;
        s.samples = o_.samples;
        s.stream = winding_key();
        return s;
    }

    const Immersion& imm_;
    VerifyOptions o_;
    mutable WindingEstimate winding_;
    mutable bool winding_done_ = false;
};

// Runs the two independent halves of a check, concurrently when allowed.
template <class A, class B>
auto both(int workers, A&& a, B&& b) {
    if (workers > 1) {
        auto fa = std::async(std::launch::async, std::forward<A>(a));
        auto vb = b();
        return std::make_pair(fa.get(), std::move(vb));
    }
    auto va = a();
    auto vb = b();
    return std::make_pair(std::move(va), std::move(vb));
}

}  // namespace detail

// Verdict from the two sides: lhs <= rhs is the claim (or lhs == rhs for
// consistency checks).
inline void decide(InequalityReport& r) {
    r.gap = r.rhs.value - r.lhs.value;
    const double scale = std::abs(r.rhs.value) > 0.0 ? std::abs(r.rhs.value) : 1.0;
    r.normalized_gap = r.gap / scale;
    const double scale_c = std::abs(r.rhs.coarse) > 0.0 ? std::abs(r.rhs.coarse) : 1.0;
    r.normalized_gap_coarse = (r.rhs.coarse - r.lhs.coarse) / scale_c;
    r.combined_error = std::hypot(r.lhs.se, r.rhs.se) + r.lhs.bias + r.rhs.bias;
    const double band = 3.0 * r.combined_error;
    const bool small = std::abs(r.normalized_gap) <= r.tol_eq;
    if (!r.lhs.converged || !r.rhs.converged) {
        r.verdict = Verdict::inconclusive;
        if (r.note.empty()) r.note = "quadrature did not converge";
        return;
    }
    if (r.consistency) {
        if (small && std::abs(r.gap) <= band)
            r.verdict = Verdict::consistent;
        else if (!small && std::abs(r.gap) > band)
            r.verdict = Verdict::inconsistent;
        else
            r.verdict = Verdict::inconclusive;
        return;
    }
    if (small && std::abs(r.gap) <= band)
        r.verdict = Verdict::equality;
    else if (r.gap > band)
        r.verdict = Verdict::strict;
    else if (r.gap < -band)
        r.verdict = Verdict::violation;
    else
        r.verdict = Verdict::inconclusive;
}

namespace detail {

inline InequalityReport finish(std::string id, const VerifyOptions& o, Side lhs, Side rhs, bool consistency = false) {
    InequalityReport r;
    r.theorem = std::move(id);
    r.consistency = consistency;
    r.K_bound = o.K_bound;
    r.tol_eq = o.tol_eq;
    r.lhs = std::move(lhs);
    r.rhs = std::move(rhs);
    decide(r);
    return r;
}

inline double sigma(int n) { return sphere_area(n - 1); }

}  // namespace detail

inline InequalityReport verify_thm1(const Immersion& imm, const VerifyOptions& o) {
    detail::require_hypersurface(imm, "thm1");
    const detail::Ingredients ing(imm, o);
    const int n = imm.space().dim();
    auto [w2, rhs] = detail::both(
        o.workers, [&] { return ing.w2(); },
        [&] { return ing.chord({Integrand::inv_r_pow, n - 2}, "iint 1/r^(n-2)"); });
    Side lhs = detail::scaled(w2, n * detail::sigma(n));
    lhs.expression = "n Sigma_{n-1} int w^2";
    return detail::finish("thm1", o, lhs, rhs);
}

inline InequalityReport verify_thm1b(const Immersion& imm, const VerifyOptions& o) {
    detail::require_hypersurface(imm, "thm1b");
    detail::require_bound(imm, o, "thm1b", false);
    const detail::Ingredients ing(imm, o);
    const int n = imm.space().dim();
    auto [w2, rhs] = detail::both(
        o.workers, [&] { return ing.w2(); },
        [&] {
            return ing.chord({Integrand::thm1b_mixed, 0, o.K_bound},
                             "iint [sn_K - sin s1 sin s2 (sn_K - r)] / sn_K^(n-1)");
        });
    Side lhs = detail::scaled(w2, n * detail::sigma(n));
    lhs.expression = "n Sigma_{n-1} int w^2";
    return detail::finish("thm1b", o, lhs, rhs);
}

inline InequalityReport verify_thm2(const Immersion& imm, const VerifyOptions& o) {
    const detail::Ingredients ing(imm, o);
    const int m = imm.dim();
    const auto s = ing.chords({{Integrand::r_times_density_dI}, {Integrand::inv_r_pow, m - 1}},
                              {"iint r l*(dI)^m", "iint 1/r^(m-1)"});
    Side lhs = detail::scaled(s[0], (m + 1) * d_m(m));
    lhs.expression = "(m+1) D_m iint r l*(dI)^m";
    InequalityReport r = detail::finish("thm2", o, lhs, s[1]);
    r.extras.push_back({"signed_integral", s[0].value});
    return r;
}

inline InequalityReport verify_thm2b(const Immersion& imm, const VerifyOptions& o) {
    detail::require_bound(imm, o, "thm2b", false);
    const detail::Ingredients ing(imm, o);
    const int m = imm.dim();
    const auto s = ing.chords({{Integrand::sn_plus_mr_density_dI, 0, o.K_bound}, {Integrand::inv_sn_pow, m - 1, o.K_bound}},
                              {"iint (sn_K + m r) l*(dI)^m", "iint 1/sn_K^(m-1)"});
    Side lhs = detail::scaled(s[0], d_m(m));
    lhs.expression = "D_m iint (sn_K + m r) l*(dI)^m";
    return detail::finish("thm2b", o, lhs, s[1]);
}

inline InequalityReport verify_croke_type(const Immersion& imm, const VerifyOptions& o) {
    detail::require_hypersurface(imm, "croke_type");
    const int n = imm.space().dim();
    if (n == 2) {
        InequalityReport r = verify_thm1(imm, o);
        r.theorem = "croke_type";
        r.note = "n = 2: identical to thm1";
        return r;
    }
    const detail::Ingredients ing(imm, o);
    auto [w2, average] = detail::both(o.workers, [&] { return ing.w2(); }, [&] { return ing.croke(); });
    Side lhs = detail::scaled(w2, croke_c(n));
    lhs.expression = "C_n int w^2";
    Side a;
    a.expression = "A(f)";
    a.pipeline = "monte_carlo";
    a.value = a.coarse = average.value;
    a.se = average.se;
    a.samples = average.samples;
    a.stream = ing.croke_key();
    Side rhs = detail::product(detail::power(ing.volume(), n / (n - 1.0)), detail::power(a, (n - 2.0) / (n - 1.0)),
                               "Vol(M)^(n/(n-1)) A(f)^((n-2)/(n-1))");
    InequalityReport r = detail::finish("croke_type", o, lhs, rhs);
    r.extras.push_back({"average", average.value});
    r.extras.push_back({"average_se", average.se});
    return r;
}

inline InequalityReport verify_yau(const Immersion& imm, const VerifyOptions& o) {
    detail::require_hypersurface(imm, "yau");
    detail::require_bound(imm, o, "yau", true);
    const detail::Ingredients ing(imm, o);
    const int n = imm.space().dim();
    const double c = (n - 1) * std::sqrt(-o.K_bound);
    auto [w1, lhs] = detail::both(
        o.workers, [&] { return ing.w1(); }, [&] { return ing.chord({Integrand::psi_yau, 0, o.K_bound}, "iint Psi_K^n"); });
    const Side vol = ing.volume();
    const Side cw = detail::scaled(w1, c);
    Side rhs = detail::sum(detail::power(vol, 2.0), detail::scaled(detail::power(cw, 2.0), -1.0),
                           "Vol(M)^2 - ((n-1) sqrt|K| int |w|)^2");
    InequalityReport r = detail::finish("yau", o, lhs, rhs);
    // classical corollary: Vol(M) > (n-1) sqrt|K| int |w|
    const double margin = vol.value - cw.value;
    const double margin_err = cw.se + cw.bias + vol.bias;
    r.extras.push_back({"classical_margin", margin});
    r.extras.push_back({"classical_margin_error", margin_err});
    if (margin < -3.0 * margin_err) {
        r.verdict = Verdict::violation;
        r.note = "classical corollary violated";
    } else if (margin <= 3.0 * margin_err) {
        r.note = "classical corollary margin within noise";
    }
    return r;
}

inline InequalityReport verify_howard(const Immersion& imm, const VerifyOptions& o) {
    detail::require_hypersurface(imm, "howard");
    if (imm.space().dim() != 2) throw ConfigError("howard requires n = 2");
    detail::require_bound(imm, o, "howard", false);
    const detail::Ingredients ing(imm, o);
    const Side w2 = ing.w2(), w1 = ing.w1();
    const double pi = boost::math::constants::pi<double>();
    Side lhs = detail::sum(detail::scaled(w2, 4 * pi), detail::scaled(detail::power(w1, 2.0), -o.K_bound),
                           "4 pi int w^2 + |K| (int |w|)^2");
    Side rhs = detail::power(ing.volume(), 2.0);
    rhs.expression = "L^2";
    return detail::finish("howard", o, lhs, rhs);
}

inline InequalityReport verify_sq_int(const Immersion& imm, const VerifyOptions& o) {
    detail::require_hypersurface(imm, "sq_int");
    const detail::Ingredients ing(imm, o);
    const int n = imm.space().dim();
    auto [w1, q] = detail::both(
        o.workers, [&] { return ing.w1(); },
        [&] { return ing.chord({Integrand::one_minus_grad_r_sq}, "iint (1 - cos s1 cos s2) r^2"); });
    Side lhs = detail::power(w1, 2.0);
    lhs.expression = "(int |w|)^2";
    Side rhs = detail::scaled(q, 1.0 / (n * (n + 1.0)));
    rhs.expression = "iint (1 - cos s1 cos s2) r^2 / (n (n+1))";
    return detail::finish("sq_int", o, lhs, rhs);
}

inline InequalityReport consistency_hyp_main(const Immersion& imm, const VerifyOptions& o) {
    detail::require_hypersurface(imm, "hyp_main");
    const detail::Ingredients ing(imm, o);
    const int n = imm.space().dim();
    const double coef = (binomial2(n) % 2 == 0 ? -1.0 : 1.0) / (std::tgamma(n * 1.0) * detail::sigma(n));
    auto [lhs, s] = detail::both(
        o.workers, [&] { return ing.w2(); }, [&] { return ing.chord({Integrand::r_times_density_dI}, "iint r l*(dI)^(n-1)"); });
    Side rhs = detail::scaled(s, coef);
    rhs.expression = "(-1)^(C(n,2)+1) / ((n-1)! Sigma_{n-1}) iint r l*(dI)^(n-1)";
    return detail::finish("hyp_main", o, lhs, rhs, true);
}

inline InequalityReport consistency_stokes(const Immersion& imm, const VerifyOptions& o) {
    const detail::Ingredients ing(imm, o);
    const auto s = ing.chords({{Integrand::r_times_density_dI}, {Integrand::density_drw}},
                              {"iint r l*(dI)^m", "iint dr ^ w1 ^ l*(dI)^(m-1)"});
    Side rhs = detail::scaled(s[1], -1.0);
    rhs.expression = "-iint dr ^ w1 ^ l*(dI)^(m-1)";
    return detail::finish("stokes", o, s[0], rhs, true);
}

// Source hypersurface for Crofton checks: a sphere about the origin enclosing the target.
inline Immersion crofton_source(const Immersion& target, bool perturbed) {
    const int res = target.space().dim() == 2 ? 256 : 32;
    double reach = 0.0;
    const FacetMesh mesh = make_mesh(target, res);
    const Vec o = target.space().origin();
    for (const auto& v : mesh.vertices) reach = std::max(reach, target.space().distance(o, v));
    ImmersionParams p;
    p.radius = 1.3 * reach;
    if (perturbed) {
        p.epsilon = 0.15;
        p.harmonic = 3;
    }
    const bool curve = target.space().dim() == 2;
    const char* kind = perturbed ? (curve ? "perturbed_circle" : "perturbed_sphere") : (curve ? "geodesic_circle" : "geodesic_sphere");
    return make_builtin(target.space(), kind, p);
}

// Measure of geodesics meeting M (with multiplicity) against 2 |B^{n-1}| Vol(M).
inline InequalityReport consistency_crofton(const Immersion& imm, const VerifyOptions& o) {
    detail::require_hypersurface(imm, "crofton");
    const detail::Ingredients ing(imm, o);
    const int n = imm.space().dim();
    const int res = o.mesh_resolution > 0 ? o.mesh_resolution : default_mesh_resolution(imm);
    const Immersion source = crofton_source(imm, false);
    const RayCaster target(make_mesh(imm, res));
    const Estimate e = crofton_estimate(make_atlas(source, o.level), RayCaster(make_mesh(source, res)), target,
                                        o.samples, o.seed, ing.crofton_key(), o.workers);
    Side lhs;
    lhs.expression = "measure of geodesics meeting M";
    lhs.pipeline = "monte_carlo";
    lhs.value = lhs.coarse = e.value;
    lhs.se = e.se;
    lhs.samples = e.samples;
    lhs.stream = ing.crofton_key();
    Side rhs = detail::scaled(ing.volume(), 2.0 * ball_volume(n - 1));
    rhs.expression = "2 |B^{n-1}| Vol(M)";
    InequalityReport r = detail::finish("crofton", o, lhs, rhs, true);
    r.extras.push_back({"resampled", static_cast<double>(e.resampled)});
    return r;
}

// The Crofton estimate from a round source against one from a perturbed source.
inline InequalityReport consistency_crofton_sources(const Immersion& imm, const VerifyOptions& o) {
    detail::require_hypersurface(imm, "crofton_sources");
    const detail::Ingredients ing(imm, o);
    const int res = o.mesh_resolution > 0 ? o.mesh_resolution : default_mesh_resolution(imm);
    const RayCaster target(make_mesh(imm, res));
    auto run = [&](bool perturbed, std::uint64_t sub) {
        const Immersion source = crofton_source(imm, perturbed);
        const Estimate e = crofton_estimate(make_atlas(source, o.level), RayCaster(make_mesh(source, res)), target,
                                            o.samples, o.seed, ing.crofton_key(sub), o.workers);
        Side s;
        s.expression = perturbed ? "Crofton measure, perturbed source" : "Crofton measure, round source";
        s.pipeline = "monte_carlo";
        s.value = s.coarse = e.value;
        s.se = e.se;
        s.samples = e.samples;
        s.stream = ing.crofton_key(sub);
        return s;
    };
    auto [a, b] = detail::both(o.workers, [&] { return run(false, 1); }, [&] { return run(true, 2); });
    return detail::finish("crofton_sources", o, a, b, true);
}

inline const std::vector<std::string>& theorem_ids() {
    static const std::vector<std::string> ids{"thm1",   "thm1b",  "thm2",     "thm2b",   "croke_type",     "yau",
                                              "howard", "sq_int", "hyp_main", "stokes", "crofton", "crofton_sources"};
    return ids;
}

inline InequalityReport verify(const std::string& id, const Immersion& imm, const VerifyOptions& o) {
    if (id == "thm1") return verify_thm1(imm, o);
    if (id == "thm1b") return verify_thm1b(imm, o);
    if (id == "thm2") return verify_thm2(imm, o);
    if (id == "thm2b") return verify_thm2b(imm, o);
    if (id == "croke_type") return verify_croke_type(imm, o);
    if (id == "yau") return verify_yau(imm, o);
    if (id == "howard") return verify_howard(imm, o);
    if (id == "sq_int") return verify_sq_int(imm, o);
    if (id == "hyp_main") return consistency_hyp_main(imm, o);
    if (id == "stokes") return consistency_stokes(imm, o);
    if (id == "crofton") return consistency_crofton(imm, o);
    if (id == "crofton_sources") return consistency_crofton_sources(imm, o);
    throw ConfigError("unknown theorem id: " + id);
}

}  // namespace geodex

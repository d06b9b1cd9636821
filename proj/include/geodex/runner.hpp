#pragma once

#include "theorems.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace geodex {

using json = nlohmann::json;

// Configuration schema (JSON form):
//
//   {"seed": 42, "workers": 1, "defaults": {...options},
//    "runs": [{"name": "sphere",
//              "model": {"n": 3, "kappa": -1},
//              "immersion": {"kind": "geodesic_sphere", "params": {"radius": 1},
//                            "multiplicity": 1, "resolution": 128, "level": 4},
//              "defaults": {...options},
//              "theorems": ["thm1b", {"id": "yau", "K_bound": -0.5}]}]}
//
// Options are K_bound, samples, tol_eq, level and resolution; a theorem entry
// overrides its run, which overrides the global defaults. The flat text form
// maps onto the same tree:
//
//   seed = 42
//   samples = 1e6
//   [run sphere]
//   model.n = 3
//   immersion.kind = geodesic_sphere
//   theorems = thm1b, yau(K_bound=-0.5)
//
// Keys before the first section are global; bare option keys inside a section
// become run defaults.

namespace config {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline json scalar(const std::string& text) {
    const std::string s = trim(text);
    if (s.empty()) throw ConfigError("empty value");
    if (s == "true") return true;
    if (s == "false") return false;
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
    std::size_t used = 0;
    try {
        if (s.find_first_of(".eE") == std::string::npos) {
            const long long v = std::stoll(s, &used);
            if (used == s.size()) return v;
        }
        const double v = std::stod(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    return s;
}

// Splits on commas outside parentheses.
inline std::vector<std::string> split_top(const std::string& s) {
    std::vector<std::string> out;
    int depth = 0;
    std::string cur;
    for (char c : s) {
        if (c == '(') ++depth;
        if (c == ')') --depth;
        if (depth < 0) throw ConfigError("unbalanced parentheses in: " + s);
        if (c == ',' && depth == 0) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (depth != 0) throw ConfigError("unbalanced parentheses in: " + s);
    out.push_back(trim(cur));
    return out;
}

inline json theorem_item(const std::string& item) {
    const auto open = item.find('(');
    if (open == std::string::npos) return trim(item);
    if (item.back() != ')') throw ConfigError("malformed theorem entry: " + item);
    json t;
    t["id"] = trim(item.substr(0, open));
    const std::string body = item.substr(open + 1, item.size() - open - 2);
    if (trim(body).empty()) return t;
    for (const auto& kv : split_top(body)) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("expected key=value in: " + item);
        t[trim(kv.substr(0, eq))] = scalar(kv.substr(eq + 1));
    }
    return t;
}

inline json list_value(const std::string& key, const std::string& text) {
    if (key == "theorems") {
        json a = json::array();
        for (const auto& item : split_top(text))
            if (!item.empty()) a.push_back(theorem_item(item));
        return a;
    }
    const auto parts = split_top(text);
    if (parts.size() == 1) return scalar(parts[0]);
    json a = json::array();
    for (const auto& p : parts) a.push_back(scalar(p));
    return a;
}

inline void assign(json& node, const std::string& dotted, json value, int line) {
    json* cur = &node;
    std::stringstream ss(dotted);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) parts.push_back(trim(part));
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        if (parts[i].empty()) throw ConfigError("line " + std::to_string(line) + ": empty key segment");
        cur = &(*cur)[parts[i]];
        if (!cur->is_null() && !cur->is_object())
            throw ConfigError("line " + std::to_string(line) + ": key conflicts with a value: " + dotted);
    }
    if (parts.empty() || parts.back().empty()) throw ConfigError("line " + std::to_string(line) + ": empty key");
    if (cur->contains(parts.back())) throw ConfigError("line " + std::to_string(line) + ": duplicate key " + dotted);
    (*cur)[parts.back()] = std::move(value);
}

inline bool is_option_key(const std::string& k) {
    return k == "K_bound" || k == "samples" || k == "tol_eq" || k == "level" || k == "resolution";
}

inline json parse_flat(const std::string& text) {
    json root = json::object();
    root["runs"] = json::array();
    json* run = nullptr;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError("line " + std::to_string(line) + ": malformed section header");
            const std::string head = trim(s.substr(1, s.size() - 2));
            if (head.rfind("run", 0) != 0) throw ConfigError("line " + std::to_string(line) + ": unknown section " + head);
            const std::string name = trim(head.substr(3));
            if (name.empty()) throw ConfigError("line " + std::to_string(line) + ": run needs a name");
            root["runs"].push_back(json{{"name", name}});
            run = &root["runs"].back();
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line) + ": expected key = value");
        const std::string key = trim(s.substr(0, eq));
        json value = list_value(key, s.substr(eq + 1));
        if (run == nullptr) {
            if (key == "seed" || key == "workers")
                assign(root, key, std::move(value), line);
            else
                assign(root, is_option_key(key) ? "defaults." + key : key, std::move(value), line);
        } else {
            assign(*run, is_option_key(key) ? "defaults." + key : key, std::move(value), line);
        }
    }
    return root;
}

inline json parse_text(const std::string& text) {
    const std::string t = trim(text);
    if (!t.empty() && t.front() == '{') {
        try {
            return json::parse(t);
        } catch (const json::parse_error& e) {
            throw ConfigError(std::string("invalid JSON: ") + e.what());
        }
    }
    return parse_flat(text);
}

}  // namespace config

struct TheoremTask {
    std::string id;
    VerifyOptions options;
};

struct RunTask {
    std::string name;
    int n = 0;
    double kappa = 0.0;
    std::string kind;
    ImmersionParams params;
    int multiplicity = 1;
    std::vector<TheoremTask> theorems;
    json echo;

    Immersion immersion() const { return make_builtin(ModelSpace(n, kappa), kind, params, multiplicity); }
};

struct RunConfig {
    std::uint64_t seed = 0;
    int workers = 1;
    std::vector<RunTask> runs;
};

namespace config {

inline void only_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [k, v] : obj.items())
        if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

inline double number(const json& v, const std::string& what) {
    if (!v.is_number()) throw ConfigError(what + " must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(what + " must be finite");
    return d;
}

inline long long integer(const json& v, const std::string& what) {
    const double d = number(v, what);
    if (d != std::floor(d) || std::abs(d) > 9.0e15) throw ConfigError(what + " must be an integer");
    return static_cast<long long>(d);
}

struct Options {
    std::optional<double> K_bound, tol_eq;
    std::optional<long long> samples, level, resolution;

    void merge(const json& obj, const std::string& where) {
        only_keys(obj, {"K_bound", "samples", "tol_eq", "level", "resolution"}, where);
        if (obj.contains("K_bound")) K_bound = number(obj["K_bound"], where + ".K_bound");
        if (obj.contains("tol_eq")) tol_eq = number(obj["tol_eq"], where + ".tol_eq");
        if (obj.contains("samples")) samples = integer(obj["samples"], where + ".samples");
        if (obj.contains("level")) level = integer(obj["level"], where + ".level");
        if (obj.contains("resolution")) resolution = integer(obj["resolution"], where + ".resolution");
    }
};

inline ImmersionParams immersion_params(const json& p, const std::string& where) {
    ImmersionParams out;
    only_keys(p, {"radius", "epsilon", "harmonic", "axes", "major", "minor", "turns", "twists"}, where);
    if (p.contains("radius")) out.radius = number(p["radius"], where + ".radius");
    if (p.contains("epsilon")) out.epsilon = number(p["epsilon"], where + ".epsilon");
    if (p.contains("harmonic")) out.harmonic = static_cast<int>(integer(p["harmonic"], where + ".harmonic"));
    if (p.contains("major")) out.major = number(p["major"], where + ".major");
    if (p.contains("minor")) out.minor = number(p["minor"], where + ".minor");
    if (p.contains("turns")) out.turns = static_cast<int>(integer(p["turns"], where + ".turns"));
    if (p.contains("twists")) out.twists = static_cast<int>(integer(p["twists"], where + ".twists"));
    if (p.contains("axes")) {
        const json& a = p["axes"];
        if (!a.is_array()) throw ConfigError(where + ".axes must be a list");
        for (const auto& x : a) out.axes.push_back(number(x, where + ".axes"));
    }
    return out;
}

inline bool needs_bound(const std::string& id) {
    return id == "thm1b" || id == "thm2b" || id == "yau" || id == "howard";
}

inline bool needs_hypersurface(const std::string& id) {
    return id != "thm2" && id != "thm2b" && id != "stokes";
}

}  // namespace config

// Builds a validated RunConfig; every check happens here, before any work.
inline RunConfig validate_config(const json& root) {
    using namespace config;
    only_keys(root, {"seed", "workers", "defaults", "runs"}, "config");
    RunConfig cfg;
    if (root.contains("seed")) {
        const json& s = root["seed"];
        if (!s.is_number_integer() || (s.is_number_integer() && !s.is_number_unsigned() && s.get<long long>() < 0))
            throw ConfigError("seed must be a non-negative integer");
        cfg.seed = s.get<std::uint64_t>();
    }
    if (root.contains("workers")) {
        const long long w = integer(root["workers"], "workers");
        if (w < 1 || w > 256) throw ConfigError("workers must be in [1, 256]");
        cfg.workers = static_cast<int>(w);
    }
    Options global;
    if (root.contains("defaults")) global.merge(root["defaults"], "defaults");
    if (!root.contains("runs") || !root["runs"].is_array() || root["runs"].empty())
        throw ConfigError("config needs at least one run");

    std::set<std::string> names;
    for (std::size_t ri = 0; ri < root["runs"].size(); ++ri) {
        const json& r = root["runs"][ri];
        const std::string where = "run " + std::to_string(ri);
        only_keys(r, {"name", "model", "immersion", "defaults", "theorems"}, where);
        RunTask task;
        task.name = r.contains("name") && r["name"].is_string() ? r["name"].get<std::string>() : "run" + std::to_string(ri);
        if (!names.insert(task.name).second) throw ConfigError("duplicate run name: " + task.name);
        const std::string at = "run '" + task.name + "'";

        if (!r.contains("model")) throw ConfigError(at + ": missing model");
        only_keys(r["model"], {"n", "kappa"}, at + ".model");
        if (!r["model"].contains("n")) throw ConfigError(at + ": missing model.n");
        task.n = static_cast<int>(integer(r["model"]["n"], at + ".model.n"));
        if (task.n < 2 || task.n > 4) throw ConfigError(at + ": model.n must be in [2, 4]");
        task.kappa = r["model"].contains("kappa") ? number(r["model"]["kappa"], at + ".model.kappa") : 0.0;
        if (task.kappa > 0.0) throw ConfigError(at + ": model.kappa must be <= 0");

        if (!r.contains("immersion")) throw ConfigError(at + ": missing immersion");
        const json& im = r["immersion"];
        only_keys(im, {"kind", "params", "multiplicity", "resolution", "level"}, at + ".immersion");
        if (!im.contains("kind") || !im["kind"].is_string()) throw ConfigError(at + ": immersion.kind must be a string");
        task.kind = im["kind"].get<std::string>();
        if (im.contains("params")) task.params = immersion_params(im["params"], at + ".immersion.params");
        if (im.contains("multiplicity")) {
            const long long k = integer(im["multiplicity"], at + ".immersion.multiplicity");
            if (k < 1 || k > 16) throw ConfigError(at + ": multiplicity must be in [1, 16]");
            task.multiplicity = static_cast<int>(k);
        }
        Options run_opts = global;
        json discretization = json::object();
        if (im.contains("resolution")) discretization["resolution"] = im["resolution"];
        if (im.contains("level")) discretization["level"] = im["level"];
        run_opts.merge(discretization, at + ".immersion");
        if (r.contains("defaults")) run_opts.merge(r["defaults"], at + ".defaults");

        std::optional<Immersion> imm;
        try {
            imm.emplace(task.immersion());
        } catch (const std::exception& e) {
            throw ConfigError(at + ": " + e.what());
        }

        if (!r.contains("theorems") || !r["theorems"].is_array() || r["theorems"].empty())
            throw ConfigError(at + ": theorems must be a non-empty list");
        json echo_theorems = json::array();
        for (std::size_t ti = 0; ti < r["theorems"].size(); ++ti) {
            const json& t = r["theorems"][ti];
            Options o = run_opts;
            std::string id;
            if (t.is_string()) {
                id = t.get<std::string>();
            } else if (t.is_object() && t.contains("id") && t["id"].is_string()) {
                id = t["id"].get<std::string>();
                json rest = t;
                rest.erase("id");
                o.merge(rest, at + "." + id);
            } else {
                throw ConfigError(at + ": theorem entries are ids or objects with an id");
            }
            const auto& ids = theorem_ids();
            if (std::find(ids.begin(), ids.end(), id) == ids.end()) throw ConfigError(at + ": unknown theorem " + id);
            const std::string tw = at + "." + id;
            if (needs_hypersurface(id) && !imm->hypersurface()) throw ConfigError(tw + " requires a closed hypersurface");
            if (id == "howard" && task.n != 2) throw ConfigError(tw + " requires n = 2");

            VerifyOptions v;
            v.K_bound = o.K_bound.value_or(task.kappa);
            if (needs_bound(id)) {
                if (v.K_bound > 0.0 || v.K_bound < task.kappa)
                    throw ConfigError(tw + ": need kappa <= K_bound <= 0");
                if (id == "yau" && !(v.K_bound < 0.0)) throw ConfigError(tw + " requires K_bound < 0");
            } else if (t.is_object() && t.contains("K_bound")) {
                throw ConfigError(tw + " takes no K_bound");
            }
            if (o.samples) {
                if (*o.samples < 100 || *o.samples > 1000000000LL) throw ConfigError(tw + ": samples must be in [100, 1e9]");
                v.samples = static_cast<std::size_t>(*o.samples);
            }
            if (o.tol_eq) {
                if (!(*o.tol_eq > 0.0 && *o.tol_eq < 1.0)) throw ConfigError(tw + ": tol_eq must be in (0, 1)");
                v.tol_eq = *o.tol_eq;
            }
            if (o.level) {
                if (*o.level < 1 || *o.level > 6) throw ConfigError(tw + ": level must be in [1, 6]");
                v.level = static_cast<int>(*o.level);
            }
            if (o.resolution) {
                const long long lo = task.n == 2 ? 16 : 8, hi = task.n == 2 ? 16384 : 512;
                if (*o.resolution < lo || *o.resolution > hi || *o.resolution % 2 != 0)
                    throw ConfigError(tw + ": resolution must be even and in [" + std::to_string(lo) + ", " +
                                      std::to_string(hi) + "]");
                v.mesh_resolution = static_cast<int>(*o.resolution);
            }
            if (!imm->hypersurface()) v.mesh_resolution = 0;
            else if (v.mesh_resolution == 0) v.mesh_resolution = default_mesh_resolution(*imm);
            v.seed = cfg.seed;
            v.salt = (static_cast<std::uint64_t>(ri) << 16) | ti;
            task.theorems.push_back({id, v});

            json te{{"id", id}, {"samples", v.samples}, {"tol_eq", v.tol_eq}, {"level", v.level}};
            if (needs_bound(id)) te["K_bound"] = v.K_bound;
            if (v.mesh_resolution > 0) te["resolution"] = v.mesh_resolution;
            echo_theorems.push_back(te);
        }
        json params{{"radius", task.params.radius}};
        const ImmersionKind kind = parse_kind(task.kind);
        if (kind == ImmersionKind::perturbed_sphere) {
            params["epsilon"] = task.params.epsilon;
            params["harmonic"] = task.params.harmonic;
        }
        if (kind == ImmersionKind::ellipsoid) params = json{{"axes", task.params.axes}};
        if (kind == ImmersionKind::space_curve)
            params = json{{"major", task.params.major}, {"minor", task.params.minor}, {"turns", task.params.turns},
                          {"twists", task.params.twists}};
        task.echo = json{{"name", task.name},
                         {"model", {{"n", task.n}, {"kappa", task.kappa}}},
                         {"immersion", {{"kind", task.kind}, {"params", params}, {"multiplicity", task.multiplicity}}},
                         {"theorems", echo_theorems}};
        cfg.runs.push_back(std::move(task));
    }
    return cfg;
}

inline RunConfig load_config(const std::string& text) { return validate_config(config::parse_text(text)); }

inline json side_json(const Side& s) {
    return json{{"expression", s.expression}, {"pipeline", s.pipeline}, {"value", s.value},
                {"coarse_value", s.coarse},   {"se", s.se},             {"bias", s.bias},
                {"samples", s.samples},       {"stream", s.stream},     {"level", s.level},
                {"converged", s.converged}};
}

inline json report_json(const InequalityReport& r, std::uint64_t seed) {
    json extras = json::object();
    for (const auto& [k, v] : r.extras) extras[k] = v;
    return json{{"theorem", r.theorem},
                {"kind", r.consistency ? "consistency" : "inequality"},
                {"seed", seed},
                {"lhs", side_json(r.lhs)},
                {"rhs", side_json(r.rhs)},
                {"gap", r.gap},
                {"normalized_gap", r.normalized_gap},
                {"normalized_gap_coarse", r.normalized_gap_coarse},
                {"combined_error", r.combined_error},
                {"tol_eq", r.tol_eq},
                {"verdict", verdict_name(r.verdict)},
                {"extras", extras},
                {"note", r.note}};
}

struct RunOutcome {
    json report;
    json timing;
    std::string csv;
    int exit_code = 0;
};

inline constexpr int exit_ok = 0;
inline constexpr int exit_violation = 1;
inline constexpr int exit_config = 2;
inline constexpr int exit_inconclusive = 3;

inline std::string csv_number(double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

// Executes every theorem; failures of single theorems are recorded, not thrown.
template <class Progress>
RunOutcome execute(const RunConfig& cfg, Progress&& progress) {
    RunOutcome out;
    out.report = json{{"seed", cfg.seed}, {"runs", json::array()}};
    out.timing = json{{"workers", cfg.workers}, {"runs", json::array()}};
    std::ostringstream csv;
    csv << "run,theorem,lhs,rhs,gap,normalized_gap,combined_error,verdict\n";
    bool violation = false, inconclusive = false;
    for (const auto& run : cfg.runs) {
        json rj = run.echo;
        rj["reports"] = json::array();
        json tj{{"name", run.name}, {"theorems", json::array()}};
        const Immersion imm = run.immersion();
        for (const auto& t : run.theorems) {
            VerifyOptions o = t.options;
            o.workers = cfg.workers;
            const auto t0 = std::chrono::steady_clock::now();
            try {
                const InequalityReport r = verify(t.id, imm, o);
                rj["reports"].push_back(report_json(r, cfg.seed));
                csv << run.name << ',' << r.theorem << ',' << csv_number(r.lhs.value) << ',' << csv_number(r.rhs.value)
                    << ',' << csv_number(r.gap) << ',' << csv_number(r.normalized_gap) << ','
                    << csv_number(r.combined_error) << ',' << verdict_name(r.verdict) << '\n';
                violation |= r.verdict == Verdict::violation || r.verdict == Verdict::inconsistent;
                inconclusive |= r.verdict == Verdict::inconclusive;
                progress(run.name, r);
            } catch (const std::exception& e) {
                rj["reports"].push_back(json{{"theorem", t.id}, {"verdict", "error"}, {"error", e.what()}});
                csv << run.name << ',' << t.id << ",,,,,,error\n";
                inconclusive = true;
                InequalityReport failed;
                failed.theorem = t.id;
                failed.note = std::string("error: ") + e.what();
                progress(run.name, failed);
            }
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            tj["theorems"].push_back(json{{"id", t.id}, {"seconds", secs}});
        }
        out.report["runs"].push_back(std::move(rj));
        out.timing["runs"].push_back(std::move(tj));
    }
    out.csv = csv.str();
    out.exit_code = violation ? exit_violation : inconclusive ? exit_inconclusive : exit_ok;
    return out;
}

inline RunOutcome execute(const RunConfig& cfg) {
    return execute(cfg, [](const std::string&, const InequalityReport&) {});
}

inline void write_outputs(const RunOutcome& o, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto put = [&](const char* name, const std::string& text) {
        std::ofstream f(dir / name, std::ios::binary);
        if (!f) throw std::runtime_error(std::string("cannot write ") + (dir / name).string());
        f << text;
    };
    put("report.json", o.report.dump(2) + "\n");
    put("summary.csv", o.csv);
    put("timing.json", o.timing.dump(2) + "\n");
}

}  // namespace geodex

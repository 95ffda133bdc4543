#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "microspec/acs.hpp"
#include "microspec/config.hpp"
#include "microspec/errors.hpp"
#include "microspec/field_states.hpp"
#include "microspec/kernels.hpp"
#include "microspec/microlocal.hpp"
#include "microspec/musc.hpp"
#include "microspec/parallel.hpp"
#include "microspec/selftest.hpp"

using namespace microspec;
namespace fs = std::filesystem;

namespace {

constexpr int kPass = 0;
constexpr int kUsage = 1;
constexpr int kFail = 2;
constexpr int kInconclusive = 3;

struct Invocation {
    std::string subcommand;
    std::string config_path;
    std::vector<std::string> sets;
    std::vector<std::pair<std::string, std::string>> shortcuts;  // key, value
    bool workers_flag = false;
    bool quiet = false;
};

struct Outcome {
    int code = kPass;
    std::string summary;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json parse_json_file(const std::string& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": invalid JSON (" + std::string(e.what()) + ")");
    }
}

class Emitter {
public:
    Emitter(const RunConfig& cfg, std::string subcommand) : cfg_(cfg), sub_(std::move(subcommand)) {
        fs::create_directories(cfg_.out_dir);
    }

    std::string report_path() const {
        return (fs::path(cfg_.out_dir) / (cfg_.report_name.empty() ? sub_ + ".json" : cfg_.report_name)).string();
    }

    void report(json j) const {
        j["schema"] = 1;
        j["version"] = MICROSPEC_VERSION;
        j["subcommand"] = sub_;
        j["run_config"] = cfg_.to_json();
        std::ofstream out(report_path());
        out << j.dump(2) << '\n';
        if (!out)
            throw std::runtime_error("cannot write " + report_path());
    }

    void ladders(const SpectrumReport& r) const {
        if (!cfg_.write_ladders)
            return;
        const fs::path dir = fs::path(cfg_.out_dir) / (sub_ + "-ladders");
        fs::create_directories(dir);
        for (std::size_t i = 0; i < r.entries.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "entry_%04zu.csv", i);
            std::ofstream out(dir / name);
            out << ladder_csv(r.entries[i].ladder);
        }
    }

    void ladder(const DecayLadder& d, const std::string& name) const {
        if (!cfg_.write_ladders)
            return;
        std::ofstream out(fs::path(cfg_.out_dir) / name);
        out << ladder_csv(d);
    }

private:
    const RunConfig& cfg_;
    std::string sub_;
};

std::string counts(const SpectrumReport& r) {
    std::ostringstream os;
    os << r.count(Verdict::singular) << " singular, " << r.count(Verdict::regular) << " regular, "
       << r.count(Verdict::inconclusive) << " inconclusive";
    return os.str();
}

bool too_inconclusive(const SpectrumReport& r, double max_fraction) {
    return !r.entries.empty() && r.count(Verdict::inconclusive) > max_fraction * r.entries.size();
}

std::vector<ScanTask> line_tasks(const std::vector<double>& xs) {
    std::vector<ScanTask> t;
    for (double x : xs)
        for (double d : {1.0, -1.0})
            t.push_back(ScanTask{{CovectorPoint{Vec2(x, 0.0), Vec2(d, 0.0)}}});
    return t;
}

std::vector<ScanTask> single_slot_plane_tasks() {
    std::vector<ScanTask> t;
    for (const Vec2& p : {Vec2(0.0, 0.0), Vec2(0.5, 0.2)})
        for (const Vec2& d : {Vec2(-1, 1), Vec2(1, 1), Vec2(1, 0), Vec2(0, 1)})
            t.push_back(ScanTask{{CovectorPoint{p, d}}});
    return t;
}

// Grid selection shared by the scanning subcommands. `arity` and `dim` fix
// the default when scan.grid is "default".
std::vector<ScanTask> resolve_tasks(const RunConfig& cfg, int arity, int dim) {
    if (cfg.grid == "file")
        return tasks_from_json(parse_json_file(cfg.samples), dim);
    if (cfg.grid == "line") {
        if (dim != 1 || arity != 1)
            throw ConfigError("scan.grid = line needs a one-dimensional single-slot scan");
        return line_tasks(cfg.line_points);
    }
    if (cfg.grid == "radzikowski") {
        if (dim != 2 || arity != 2)
            throw ConfigError("scan.grid = radzikowski needs a two-slot scan on the plane");
        return radzikowski_grid();
    }
    if (arity == 2)
        return radzikowski_grid();
    return dim == 1 ? line_tasks(cfg.line_points) : single_slot_plane_tasks();
}

SmearableKernel kernel_by_name(const RunConfig& cfg, std::shared_ptr<const QuasifreeState>& keep) {
    const double a = cfg.kernel_center;
    if (cfg.kernel == "delta")
        return delta_kernel(a);
    if (cfg.kernel == "delta-prime")
        return delta_prime_kernel(a);
    if (cfg.kernel == "heaviside")
        return heaviside_kernel(a);
    if (cfg.kernel == "gaussian")
        return gaussian_density_kernel(a);
    if (cfg.kernel == "boundary-value")
        return boundary_value_kernel(a);
    keep = std::make_shared<QuasifreeState>(make_state(cfg.state_descriptor(), cfg.state_options()));
    return keep->two_point_kernel();
}

std::shared_ptr<const QuasifreeState> build_state(const RunConfig& cfg) {
    return std::make_shared<QuasifreeState>(make_state(cfg.state_descriptor(), cfg.state_options()));
}

// ---------------------------------------------------------------------------
// Subcommands

Outcome wf_scan(const RunConfig& cfg, const Emitter& out) {
    std::shared_ptr<const QuasifreeState> state;
    const SmearableKernel k = kernel_by_name(cfg, state);
    const SpectrumReport r = estimate_wavefront(k, resolve_tasks(cfg, k.arity, k.dim), cfg.ladder);
    json j = report_to_json(r);
    if (state)
        j["state_certificate"] = state->certificate().to_json();
    out.report(j);
    out.ladders(r);
    const bool weak = too_inconclusive(r, cfg.max_inconclusive);
    return {weak ? kInconclusive : kPass, k.name + ": " + counts(r)};
}

Outcome hadamard_check(const RunConfig& cfg, const Emitter& out) {
    const auto state = build_state(cfg);
    HadamardOptions ho;
    ho.ang_tol_deg = cfg.ang_tol;
    ho.max_inconclusive = cfg.max_inconclusive;
    const HadamardResult h =
        hadamard_verdict(*state, cfg.model(), resolve_tasks(cfg, 2, 2), cfg.ladder, ho);
    json j = report_to_json(h.report);
    j["hadamard"] = h.to_json();
    j["verdict"] = h.verdict;
    j["state_certificate"] = state->certificate().to_json();
    out.report(j);
    out.ladders(h.report);
    const std::string summary = state->descriptor().to_string() + ": " + h.verdict + " (" + counts(h.report) + ")";
    if (h.verdict == "insufficient-resolution")
        return {kInconclusive, summary};
    if (cfg.expect == "hadamard" && h.verdict != "hadamard-consistent")
        return {kFail, summary};
    if (cfg.expect == "not-hadamard" && h.verdict != "not-hadamard")
        return {kFail, summary};
    return {kPass, summary};
}

Outcome spec_residual(const RunConfig& cfg, const Emitter& out) {
    const auto state = build_state(cfg);
    const TestFunction g = TestFunction::gaussian(2, Vec2::Zero(), 1.0).scaled(cfg.spectral_amplitude);
    json probes = json::array();
    bool ok = true;
    int checked = 0;
    for (const Vec2& p : cfg.spectral_probes) {
        const SpectralResidual r = vacuum_spectral_residual(*state, spectral_probe(p, cfg.spectral_width), g);
        const bool outside_forward = !(p[0] >= std::abs(p[1]));
        const bool pass = !outside_forward || r.relative < cfg.spec_tol;
        if (outside_forward) {
            ++checked;
            ok = ok && pass;
        }
        probes.push_back({{"p", {p[0], p[1]}},
                          {"outside_forward_cone", outside_forward},
                          {"residual", {r.residual.real(), r.residual.imag()}},
                          {"peak", r.peak},
                          {"relative", r.relative},
                          {"nodes", r.nodes},
                          {"pass", pass}});
    }
    const std::string verdict = ok ? "pass" : "FAIL";
    out.report({{"state", state->descriptor().to_string()},
                {"spec_tol", cfg.spec_tol},
                {"probes", probes},
                {"checked", checked},
                {"verdict", verdict}});
    return {ok ? kPass : kFail,
            state->descriptor().to_string() + ": " + verdict + " on " + std::to_string(checked) +
                " probes outside the forward cone"};
}

Outcome musc_check(const RunConfig& cfg, const Emitter& out) {
    if (cfg.report_in.empty())
        throw ConfigError("musc-check needs musc.report (or --report)");
    const SpectrumReport r = report_from_json(parse_json_file(cfg.report_in));
    MembershipOptions mo;
    mo.cone_tol = cfg.cone_tol;
    const ContainmentResult c = musc_containment(r, cfg.model(), cfg.variant, mo);
    json j = c.to_json();
    j["input_report"] = cfg.report_in;
    j["input_counts"] = {{"regular", r.count(Verdict::regular)},
                         {"singular", r.count(Verdict::singular)},
                         {"inconclusive", r.count(Verdict::inconclusive)}};
    out.report(j);
    std::ostringstream os;
    os << c.verdict << ": " << c.inside.size() << " inside, " << c.outside.size() << " outside, "
       << c.inconclusive.size() << " inconclusive of " << c.checked << " singular entries";
    if (c.verdict == "FAIL")
        return {kFail, os.str()};
    if (c.verdict == "inconclusive")
        return {kInconclusive, os.str()};
    return {kPass, os.str()};
}

FunctionalModel acs_model(const RunConfig& cfg, std::shared_ptr<const QuasifreeState>& keep) {
    if (cfg.acs_model == "function-algebra") {
        if (cfg.kernel == "two-point")
            throw ConfigError("acs.model = function-algebra needs a one-dimensional kernel.name");
        return FunctionalModel::function_algebra(kernel_by_name(cfg, keep));
    }
    keep = build_state(cfg);
    return FunctionalModel::weyl_state(keep, cfg.epsilon);
}

Outcome acs_scan(const RunConfig& cfg, const Emitter& out) {
    std::shared_ptr<const QuasifreeState> state;
    const FunctionalModel m = acs_model(cfg, state);
    const SpectrumReport r = estimate_acs(m, cfg.order, cfg.mu, resolve_tasks(cfg, cfg.order, m.dim()), cfg.acs);
    json j = report_to_json(r);
    if (state)
        j["state_certificate"] = state->certificate().to_json();
    out.report(j);
    out.ladders(r);
    const bool weak = too_inconclusive(r, cfg.max_inconclusive);
    return {weak ? kInconclusive : kPass, m.describe() + ": " + counts(r)};
}

Outcome stationary_check(const RunConfig& cfg, const Emitter& out) {
    std::shared_ptr<const QuasifreeState> state;
    const FunctionalModel m = acs_model(cfg, state);
    std::vector<ScanTask> tasks = resolve_tasks(cfg, 2, 2);
    int dropped = 0;
    if (cfg.grid == "default" || cfg.grid == "radzikowski") {
        const double s = std::sin(cfg.ang_tol * kPi / 180.0);
        std::vector<ScanTask> kept;
        for (const ScanTask& t : tasks) {
            bool ok = true;
            for (const CovectorPoint& p : t.points)
                ok = ok && std::abs(p.xi[0]) >= s * p.xi.norm();
            if (ok)
                kept.push_back(t);
            else
                ++dropped;
        }
        tasks = std::move(kept);
    }
    const StationaryResult r = stationary_acs_scan(m, cfg.mu, tasks, cfg.acs, cfg.ang_tol, cfg.cone_tol);
    json j = report_to_json(r.report);
    json st = r.to_json();
    st.erase("report");
    st["dropped_conormal_samples"] = dropped;
    j["stationary"] = st;
    j["verdict"] = r.verdict;
    if (state)
        j["state_certificate"] = state->certificate().to_json();
    out.report(j);
    out.ladders(r.report);
    return {r.verdict == "pass" ? kPass : kFail, m.describe() + ": " + r.verdict + " (" + counts(r.report) + ")"};
}

Outcome gacs_probe_cmd(const RunConfig& cfg, const Emitter& out) {
    const auto state = build_state(cfg);
    const TestFunction h = TestFunction::bump(2, Vec2::Zero(), cfg.symbol_envelope);
    const double r = cfg.profile_radius;
    const TestFunction f = TestFunction::bump(2, Vec2::Zero(), r).scaled(1.0 / (r * r));
    const SymbolBuild a =
        build_weyl_symbol(state, cfg.gacs_q.base, h, f, cfg.symbol_s, cfg.symbol_a, cfg.epsilon, cfg.acs);
    const SymbolBuild b =
        build_weyl_symbol(state, cfg.gacs_qp.base, h, f, cfg.symbol_s, cfg.symbol_a, cfg.epsilon, cfg.acs);
    const DecayLadder d = gacs_probe(a.symbol, b.symbol, cfg.gacs_q, cfg.gacs_qp, cfg.acs, cfg.neighbourhood);
    out.report({{"state", state->descriptor().to_string()},
                {"symbols", {a.symbol.to_json(), b.symbol.to_json()}},
                {"estimates", {a.estimate.to_json(), b.estimate.to_json()}},
                {"ladder", {{"scales", d.scales}, {"amplitudes", d.amplitudes}, {"slope", d.slope},
                            {"r2", d.r2}, {"annotation", d.annotation}}},
                {"verdict", to_string(d.verdict)}});
    out.ladder(d, "gacs-probe-ladder.csv");
    const bool estimates_ok = a.estimate.passed && b.estimate.passed;
    std::string summary = std::string(to_string(d.verdict)) + " (slope " + std::to_string(d.slope) + ")";
    if (!estimates_ok)
        summary += "; symbol estimate failed";
    if (!estimates_ok)
        return {kFail, summary};
    return {d.verdict == Verdict::inconclusive ? kInconclusive : kPass, summary};
}

Outcome selftest(const RunConfig&, const Emitter& out) {
    const SelftestResult r = run_selftest();
    out.report(r.to_json());
    int failed = 0;
    for (const SelftestCheck& c : r.checks) {
        failed += c.passed ? 0 : 1;
        if (!c.passed)
            std::cerr << "selftest: " << c.module << " / " << c.name << " failed " << c.detail << '\n';
    }
    return {r.passed() ? kPass : kFail,
            std::to_string(r.checks.size() - failed) + "/" + std::to_string(r.checks.size()) + " checks passed"};
}

int run(const Invocation& inv) {
    Config c = inv.config_path.empty() ? Config{} : Config::load(inv.config_path);
    for (const auto& [key, value] : inv.shortcuts)
        c.set(key, value);
    for (const std::string& s : inv.sets)
        c.apply_override(s);
    std::optional<std::string> env;
    if (const char* w = std::getenv("MICROSPEC_WORKERS"))
        env = std::string(w);
    const RunConfig cfg = resolve_run_config(c, env, inv.workers_flag);
    if (cfg.workers > 0)
        set_worker_count(cfg.workers);

    const Emitter out(cfg, inv.subcommand);
    Outcome o;
    const std::string& s = inv.subcommand;
    if (s == "wf-scan")
        o = wf_scan(cfg, out);
    else if (s == "hadamard-check")
        o = hadamard_check(cfg, out);
    else if (s == "spec-residual")
        o = spec_residual(cfg, out);
    else if (s == "musc-check")
        o = musc_check(cfg, out);
    else if (s == "acs-scan")
        o = acs_scan(cfg, out);
    else if (s == "stationary-check")
        o = stationary_check(cfg, out);
    else if (s == "gacs-probe")
        o = gacs_probe_cmd(cfg, out);
    else
        o = selftest(cfg, out);
    if (!inv.quiet)
        std::cout << s << ": " << o.summary << "\nreport: " << out.report_path() << '\n';
    return o.code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"microspec: numerical microlocal spectrum toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", MICROSPEC_VERSION);
    Invocation inv;

    struct Shortcut {
        const char* flag;
        const char* key;
        const char* help;
    };
    const std::vector<Shortcut> shortcuts = {
        {"--state", "state.descriptor", "state descriptor, e.g. vacuum:m=1"},
        {"--expect", "run.expect", "hadamard or not-hadamard"},
        {"--kernel", "kernel.name", "delta, delta-prime, heaviside, gaussian, boundary-value, two-point"},
        {"--samples", "scan.samples", "JSON samples file (sets scan.grid = file)"},
        {"--grid", "scan.grid", "default, radzikowski, line or file"},
        {"--model", "acs.model", "weyl or function-algebra"},
        {"--order", "acs.order", "number of ACS slots (1 or 2)"},
        {"--mu", "acs.mu", "localization degree in [0, 1]"},
        {"--report", "musc.report", "input report for musc-check"},
        {"--variant", "musc.variant", "lightlike-geodesic or minkowski-straight"},
        {"--out", "output.dir", "output directory"},
        {"--seed", "run.seed", "random seed"},
    };
    const std::vector<std::pair<const char*, const char*>> subs = {
        {"wf-scan", "wavefront scan of a reference kernel or a two-point function"},
        {"hadamard-check", "Hadamard verdict of a quasifree state"},
        {"spec-residual", "vacuum spectral residual on configured probes"},
        {"musc-check", "cone containment of the singular entries of a report"},
        {"acs-scan", "asymptotic correlation spectrum scan"},
        {"stationary-check", "energy-balance check of a stationary state"},
        {"gacs-probe", "pair probe of two Weyl testing symbols"},
        {"selftest", "closed-form checks of every module"},
    };
    std::map<std::string, std::string> values;
    std::string workers;
    for (const auto& [name, help] : subs) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("-c,--config", inv.config_path, "configuration file")->check(CLI::ExistingFile);
        sub->add_option("--set", inv.sets, "override, section.key=value (repeatable)");
        for (const Shortcut& s : shortcuts)
            sub->add_option(s.flag, values[s.key], s.help);
        sub->add_option("--workers", workers, "worker count (overrides MICROSPEC_WORKERS)");
        sub->add_flag("-q,--quiet", inv.quiet, "no summary on stdout");
        sub->callback([&inv, sub] { inv.subcommand = sub->get_name(); });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    for (const Shortcut& s : shortcuts)
        if (!values[s.key].empty())
            inv.shortcuts.emplace_back(s.key, values[s.key]);
    if (!values["scan.samples"].empty() && values["scan.grid"].empty())
        inv.shortcuts.emplace_back("scan.grid", "file");
    if (!workers.empty()) {
        inv.shortcuts.emplace_back("run.workers", workers);
        inv.workers_flag = true;
    }

    try {
        return run(inv);
    } catch (const ConfigError& e) {
        std::cerr << "microspec: config error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "microspec: invalid input: " << e.what() << '\n';
        return kUsage;
    } catch (const DomainError& e) {
        std::cerr << "microspec: domain error: " << e.what() << '\n';
        return kUsage;
    } catch (const UnsupportedError& e) {
        std::cerr << "microspec: unsupported: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "microspec: " << e.what() << '\n';
        return kInconclusive;
    }
}

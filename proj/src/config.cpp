#include "microspec/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "microspec/errors.hpp"

namespace microspec {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep))
        out.push_back(trim(cur));
    return out;
}

bool parse_number(const std::string& s, double& v) {
    if (s.empty())
        return false;
    std::size_t used = 0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        return false;
    }
    return used == s.size();
}

json vec_json(const Vec2& v) { return json::array({v[0], v[1]}); }

}  // namespace

Config Config::parse(const std::string& text) {
    Config c;
    std::istringstream in(text);
    std::string raw, section = "run";
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = raw;
        const auto hash = s.find('#');
        if (hash != std::string::npos)
            s.erase(hash);
        s = trim(s);
        if (s.empty())
            continue;
        if (s.front() == '[') {
            if (s.back() != ']' || s.size() < 3)
                throw ConfigError("malformed section header '" + s + "'", line);
            section = trim(s.substr(1, s.size() - 2));
            if (section.empty() || section.find_first_of(" \t.=") != std::string::npos)
                throw ConfigError("invalid section name '" + section + "'", line);
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected 'key = value', got '" + s + "'", line);
        const std::string key = trim(s.substr(0, eq));
        if (key.empty() || key.find_first_of(" \t.") != std::string::npos)
            throw ConfigError("invalid key '" + key + "'", line);
        c.values_[section + "." + key] = Value{trim(s.substr(eq + 1)), line};
    }
    return c;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

void Config::set(const std::string& key, const std::string& value) {
    if (key.find('.') == std::string::npos)
        throw ConfigError("override key '" + key + "' must have the form section.key");
    values_[key] = Value{trim(value), 0};
}

void Config::apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override '" + assignment + "' must have the form section.key=value");
    set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

std::vector<std::string> Config::keys() const {
    std::vector<std::string> k;
    for (const auto& [key, v] : values_)
        k.push_back(key);
    return k;
}

void Config::fail(const std::string& key, const std::string& msg) const {
    const auto it = values_.find(key);
    if (it != values_.end() && it->second.line > 0)
        throw ConfigError(key + ": " + msg, it->second.line);
    throw ConfigError("--set " + key + ": " + msg);
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second.text;
}

double Config::get_double(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end())
        return fallback;
    double v = 0.0;
    if (!parse_number(it->second.text, v))
        fail(key, "expected a number, got '" + it->second.text + "'");
    return v;
}

int Config::get_int(const std::string& key, int fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end())
        return fallback;
    const double v = get_double(key, fallback);
    if (v != std::floor(v) || std::abs(v) > 1e9)
        fail(key, "expected an integer, got '" + it->second.text + "'");
    return static_cast<int>(v);
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end())
        return fallback;
    const std::string& t = it->second.text;
    if (t == "true" || t == "yes" || t == "on" || t == "1")
        return true;
    if (t == "false" || t == "no" || t == "off" || t == "0")
        return false;
    fail(key, "expected true or false, got '" + t + "'");
}

std::vector<double> Config::get_list(const std::string& key, const std::vector<double>& fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end())
        return fallback;
    std::vector<double> out;
    for (const std::string& part : split(it->second.text, ',')) {
        double v = 0.0;
        if (!parse_number(part, v))
            fail(key, "expected a comma separated list of numbers, got '" + it->second.text + "'");
        out.push_back(v);
    }
    return out;
}

Vec2 Config::get_vec2(const std::string& key, const Vec2& fallback) const {
    if (!has(key))
        return fallback;
    const std::vector<double> v = get_list(key, {});
    if (v.size() != 2)
        fail(key, "expected two numbers 'a, b'");
    return Vec2(v[0], v[1]);
}

std::vector<Vec2> Config::get_points(const std::string& key, const std::vector<Vec2>& fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end())
        return fallback;
    std::vector<Vec2> out;
    for (const std::string& part : split(it->second.text, ';')) {
        std::vector<double> v;
        for (const std::string& x : split(part, ',')) {
            double d = 0.0;
            if (!parse_number(x, d))
                fail(key, "expected points 'a, b; c, d', got '" + it->second.text + "'");
            v.push_back(d);
        }
        if (v.size() != 2)
            fail(key, "each point needs two coordinates");
        out.emplace_back(v[0], v[1]);
    }
    return out;
}

void Config::require_known(const std::vector<std::string>& known) const {
    for (const auto& [key, v] : values_)
        if (std::find(known.begin(), known.end(), key) == known.end())
            fail(key, "unknown key");
}

const std::vector<std::string>& known_config_keys() {
    static const std::vector<std::string> keys = {
        "model.kind", "model.omega2", "model.t_lo", "model.t_hi", "model.x_lo", "model.x_hi",
        "state.descriptor",
        "kernel.name", "kernel.center",
        "scan.grid", "scan.samples", "scan.points",
        "ladder.R0", "ladder.J", "ladder.order_min", "ladder.order_singular_max",
        "ladder.fit_quality_min", "ladder.abs_floor", "ladder.tail", "ladder.cone_half_angle_deg",
        "ladder.net_size", "ladder.net_size_arity2", "ladder.window_radius", "ladder.window_min",
        "ladder.j_min", "ladder.j_max",
        "thresholds.ang_tol", "thresholds.cone_tol", "thresholds.quad_tol", "thresholds.spec_tol",
        "thresholds.max_inconclusive",
        "acs.model", "acs.order", "acs.mu", "acs.battery", "acs.epsilon", "acs.envelope_radius",
        "acs.net", "acs.region_radius", "acs.radii", "acs.skip_tol",
        "gacs.q", "gacs.xi", "gacs.qp", "gacs.xip", "gacs.s", "gacs.a", "gacs.profile_radius",
        "gacs.envelope_radius", "gacs.neighbourhood",
        "spectral.probes", "spectral.width", "spectral.amplitude",
        "musc.variant", "musc.report",
        "output.dir", "output.report", "output.ladders",
        "run.workers", "run.seed", "run.expect",
    };
    return keys;
}

RunConfig resolve_run_config(const Config& c, const std::optional<std::string>& env_workers,
                             bool workers_from_flag) {
    c.require_known(known_config_keys());
    RunConfig r;
    auto positive = [&](const std::string& key, double fallback) {
        const double v = c.get_double(key, fallback);
        if (!(v > 0.0))
            c.fail(key, "must be positive");
        return v;
    };
    auto one_of = [&](const std::string& key, const std::string& fallback,
                      std::initializer_list<const char*> allowed) {
        const std::string v = c.get_string(key, fallback);
        for (const char* a : allowed)
            if (v == a)
                return v;
        std::string list;
        for (const char* a : allowed)
            list += std::string(list.empty() ? "" : ", ") + a;
        c.fail(key, "must be one of " + list + ", got '" + v + "'");
    };

    r.model_kind = one_of("model.kind", r.model_kind, {"minkowski", "conformal"});
    r.omega2 = c.get_string("model.omega2", r.omega2);
    r.domain.t_lo = c.get_double("model.t_lo", r.domain.t_lo);
    r.domain.t_hi = c.get_double("model.t_hi", r.domain.t_hi);
    r.domain.x_lo = c.get_double("model.x_lo", r.domain.x_lo);
    r.domain.x_hi = c.get_double("model.x_hi", r.domain.x_hi);
    if (!(r.domain.t_lo < r.domain.t_hi && r.domain.x_lo < r.domain.x_hi))
        c.fail("model.t_lo", "chart bounds must satisfy lo < hi");

    r.state = c.get_string("state.descriptor", r.state);
    r.kernel = one_of("kernel.name", r.kernel,
                      {"delta", "delta-prime", "heaviside", "gaussian", "boundary-value", "two-point"});
    r.kernel_center = c.get_double("kernel.center", r.kernel_center);

    r.grid = one_of("scan.grid", r.grid, {"default", "radzikowski", "line", "file"});
    r.samples = c.get_string("scan.samples", r.samples);
    if (r.grid == "file" && r.samples.empty())
        c.fail("scan.grid", "grid = file needs scan.samples");
    r.line_points = c.get_list("scan.points", r.line_points);

    LadderConfig& L = r.ladder;
    L.R0 = positive("ladder.R0", L.R0);
    L.J = c.get_int("ladder.J", L.J);
    L.order_min = positive("ladder.order_min", L.order_min);
    L.order_singular_max = positive("ladder.order_singular_max", L.order_singular_max);
    L.fit_quality_min = positive("ladder.fit_quality_min", L.fit_quality_min);
    L.abs_floor = positive("ladder.abs_floor", L.abs_floor);
    L.tail = c.get_int("ladder.tail", L.tail);
    L.cone_half_angle_deg = positive("ladder.cone_half_angle_deg", L.cone_half_angle_deg);
    L.net_size = c.get_int("ladder.net_size", L.net_size);
    L.net_size_arity2 = c.get_int("ladder.net_size_arity2", L.net_size_arity2);
    L.window_radius = positive("ladder.window_radius", L.window_radius);
    L.window_min = positive("ladder.window_min", L.window_min);
    if (L.J < 2 || L.tail < 2 || L.net_size < 1 || L.net_size_arity2 < 1)
        c.fail("ladder.J", "ladder.J and ladder.tail must be at least 2 and net sizes at least 1");
    if (L.order_singular_max >= L.order_min)
        c.fail("ladder.order_singular_max", "must be below ladder.order_min");

    r.ang_tol = positive("thresholds.ang_tol", r.ang_tol);
    r.cone_tol = positive("thresholds.cone_tol", r.cone_tol);
    r.quad_tol = positive("thresholds.quad_tol", r.quad_tol);
    r.spec_tol = positive("thresholds.spec_tol", r.spec_tol);
    r.max_inconclusive = positive("thresholds.max_inconclusive", r.max_inconclusive);

    AcsOptions& A = r.acs;
    A.ladder = L;
    A.j_min = c.get_int("ladder.j_min", A.j_min);
    A.j_max = c.get_int("ladder.j_max", A.j_max);
    if (A.j_min < 0 || A.j_max - A.j_min < 2)
        c.fail("ladder.j_min", "must be >= 0 with at least 3 rungs up to ladder.j_max");
    r.acs_model = one_of("acs.model", r.acs_model, {"weyl", "function-algebra"});
    r.order = c.get_int("acs.order", r.order);
    if (r.order < 1 || r.order > 2)
        c.fail("acs.order", "must be 1 or 2");
    r.mu = c.get_double("acs.mu", r.mu);
    if (!(r.mu >= 0.0 && r.mu <= 1.0))
        c.fail("acs.mu", "must lie in [0, 1]");
    A.battery = c.get_int("acs.battery", A.battery);
    if (A.battery < 1)
        c.fail("acs.battery", "must be at least 1");
    r.epsilon = positive("acs.epsilon", r.epsilon);
    A.envelope_radius = c.get_double("acs.envelope_radius", A.envelope_radius);
    if (A.envelope_radius < 0.0)
        c.fail("acs.envelope_radius", "must be 0 (model default) or positive");
    A.net = c.get_int("acs.net", A.net);
    A.region_radius = positive("acs.region_radius", A.region_radius);
    A.radii = c.get_list("acs.radii", A.radii);
    for (double rad : A.radii)
        if (!(rad > 0.0))
            c.fail("acs.radii", "must be positive");
    A.skip_tol = positive("acs.skip_tol", A.skip_tol);

    r.gacs_q = {c.get_vec2("gacs.q", r.gacs_q.base), c.get_vec2("gacs.xi", r.gacs_q.xi)};
    r.gacs_qp = {c.get_vec2("gacs.qp", r.gacs_qp.base), c.get_vec2("gacs.xip", r.gacs_qp.xi)};
    r.symbol_s = c.get_double("gacs.s", r.symbol_s);
    if (r.symbol_s < 1.0)
        c.fail("gacs.s", "must be at least 1");
    r.symbol_a = c.get_double("gacs.a", r.symbol_a);
    r.profile_radius = positive("gacs.profile_radius", r.profile_radius);
    r.symbol_envelope = positive("gacs.envelope_radius", r.symbol_envelope);
    r.neighbourhood = positive("gacs.neighbourhood", r.neighbourhood);

    r.spectral_probes = c.get_points("spectral.probes", r.spectral_probes);
    r.spectral_width = positive("spectral.width", r.spectral_width);
    r.spectral_amplitude = positive("spectral.amplitude", r.spectral_amplitude);

    try {
        r.variant = cone_variant_from_string(c.get_string("musc.variant", to_string(r.variant)));
    } catch (const ConfigError& e) {
        c.fail("musc.variant", e.what());
    }
    r.report_in = c.get_string("musc.report", r.report_in);

    r.out_dir = c.get_string("output.dir", r.out_dir);
    r.report_name = c.get_string("output.report", r.report_name);
    r.write_ladders = c.get_bool("output.ladders", r.write_ladders);
    r.workers = c.get_int("run.workers", r.workers);
    if (env_workers && !workers_from_flag) {
        double w = 0.0;
        if (!parse_number(trim(*env_workers), w) || w != std::floor(w) || w < 1.0)
            throw ConfigError("MICROSPEC_WORKERS must be a positive integer, got '" + *env_workers + "'");
        r.workers = static_cast<int>(w);
    }
    if (r.workers < 0)
        c.fail("run.workers", "must be >= 0");
    r.seed = static_cast<unsigned>(c.get_int("run.seed", static_cast<int>(r.seed)));
    r.expect = one_of("run.expect", "", {"", "hadamard", "not-hadamard"});

    // Validate descriptors early so that errors carry the key.
    try {
        (void)StateDescriptor::parse(r.state);
    } catch (const std::exception& e) {
        c.fail("state.descriptor", e.what());
    }
    try {
        (void)r.model();
    } catch (const std::exception& e) {
        c.fail(c.has("model.omega2") ? "model.omega2" : "model.kind", e.what());
    }
    return r;
}

SpacetimeModel RunConfig::model() const {
    if (model_kind == "conformal")
        return SpacetimeModel::conformally_flat(omega2, domain);
    return SpacetimeModel::minkowski(domain);
}

StateDescriptor RunConfig::state_descriptor() const { return StateDescriptor::parse(state); }

StateOptions RunConfig::state_options() const {
    StateOptions o;
    o.quad_tol = quad_tol;
    o.seed = seed;
    return o;
}

json RunConfig::to_json() const {
    return {
        {"model", {{"kind", model_kind}, {"omega2", omega2},
                   {"chart", {domain.t_lo, domain.t_hi, domain.x_lo, domain.x_hi}}}},
        {"state", state},
        {"kernel", {{"name", kernel}, {"center", kernel_center}}},
        {"scan", {{"grid", grid}, {"samples", samples}, {"points", line_points}}},
        {"ladder", microspec::to_json(ladder)},
        {"lambda_range", {acs.j_min, acs.j_max}},
        {"thresholds", {{"ang_tol", ang_tol}, {"cone_tol", cone_tol}, {"quad_tol", quad_tol},
                        {"spec_tol", spec_tol}, {"max_inconclusive", max_inconclusive}}},
        {"acs", {{"model", acs_model}, {"order", order}, {"mu", mu}, {"battery", acs.battery},
                 {"epsilon", epsilon}, {"envelope_radius", acs.envelope_radius}, {"net", acs.net},
                 {"region_radius", acs.region_radius}, {"radii", acs.radii}, {"skip_tol", acs.skip_tol}}},
        {"gacs", {{"q", vec_json(gacs_q.base)}, {"xi", vec_json(gacs_q.xi)}, {"qp", vec_json(gacs_qp.base)},
                  {"xip", vec_json(gacs_qp.xi)}, {"s", symbol_s}, {"a", symbol_a},
                  {"profile_radius", profile_radius}, {"envelope_radius", symbol_envelope},
                  {"neighbourhood", neighbourhood}}},
        {"spectral", {{"probes", [&] {
                           json a = json::array();
                           for (const Vec2& p : spectral_probes)
                               a.push_back(vec_json(p));
                           return a;
                       }()},
                      {"width", spectral_width},
                      {"amplitude", spectral_amplitude}}},
        {"musc", {{"variant", to_string(variant)}, {"report", report_in}}},
        {"output", {{"dir", out_dir}, {"report", report_name}, {"ladders", write_ladders}}},
        {"run", {{"workers", workers}, {"seed", seed}, {"expect", expect}}},
    };
}

std::vector<ScanTask> tasks_from_json(const json& j, int dim) {
    if (!j.is_array())
        throw ConfigError("samples: expected a JSON array of {points, xis} objects");
    std::vector<ScanTask> tasks;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const json& e = j[i];
        const std::string where = "samples[" + std::to_string(i) + "]";
        if (!e.is_object() || !e.contains("points") || !e.contains("xis"))
            throw ConfigError(where + ": needs 'points' and 'xis'");
        const json &pts = e["points"], &xis = e["xis"];
        if (!pts.is_array() || !xis.is_array() || pts.size() != xis.size() || pts.empty())
            throw ConfigError(where + ": 'points' and 'xis' must be arrays of equal nonzero length");
        ScanTask t;
        for (std::size_t s = 0; s < pts.size(); ++s) {
            auto vec = [&](const json& a) {
                if (!a.is_array() || static_cast<int>(a.size()) != dim)
                    throw ConfigError(where + ": coordinates must have " + std::to_string(dim) + " entries");
                Vec2 v = Vec2::Zero();
                for (int d = 0; d < dim; ++d) {
                    if (!a[d].is_number())
                        throw ConfigError(where + ": coordinates must be numbers");
                    v[d] = a[d].get<double>();
                }
                return v;
            };
            t.points.push_back({vec(pts[s]), vec(xis[s])});
        }
        tasks.push_back(std::move(t));
    }
    return tasks;
}

json tasks_to_json(const std::vector<ScanTask>& tasks, int dim) {
    json out = json::array();
    for (const ScanTask& t : tasks) {
        json pts = json::array(), xis = json::array();
        for (const CovectorPoint& p : t.points) {
            json a = json::array(), b = json::array();
            for (int d = 0; d < dim; ++d) {
                a.push_back(p.base[d]);
                b.push_back(p.xi[d]);
            }
            pts.push_back(a);
            xis.push_back(b);
        }
        out.push_back({{"points", pts}, {"xis", xis}});
    }
    return out;
}

}  // namespace microspec

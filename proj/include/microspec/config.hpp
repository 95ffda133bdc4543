#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "microspec/acs.hpp"
#include "microspec/field_states.hpp"
#include "microspec/geometry.hpp"
#include "microspec/microlocal.hpp"
#include "microspec/musc.hpp"

namespace microspec {

/// Flat key/value configuration with sections.
///
///     # comment
///     [section]
///     key = value
///
/// Keys are addressed as "section.key". Keys before the first section
/// header belong to section "run". Later assignments replace earlier ones.
class Config {
public:
    static Config parse(const std::string& text);
    /// Throws ConfigError when the file cannot be read.
    static Config load(const std::string& path);

    /// Command-line override; `line` stays 0 so errors name the flag instead.
    void set(const std::string& key, const std::string& value);
    /// "section.key=value".
    void apply_override(const std::string& assignment);

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    std::vector<std::string> keys() const;

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    /// "a, b" as a point of R^2.
    Vec2 get_vec2(const std::string& key, const Vec2& fallback) const;
    /// Comma separated numbers.
    std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) const;
    /// Semicolon separated points "a, b; c, d".
    std::vector<Vec2> get_points(const std::string& key, const std::vector<Vec2>& fallback) const;

    /// Throws ConfigError on the first key that is not in `known`.
    void require_known(const std::vector<std::string>& known) const;
    /// ConfigError anchored at the line that set `key` (or naming the flag).
    [[noreturn]] void fail(const std::string& key, const std::string& msg) const;

private:
    struct Value {
        std::string text;
        int line = 0;
    };
    std::map<std::string, Value> values_;
};

/// Every key understood by `resolve_run_config`.
const std::vector<std::string>& known_config_keys();

struct RunConfig {
    // model
    std::string model_kind = "minkowski";
    std::string omega2 = "1";
    ChartDomain domain;
    // state
    std::string state = "vacuum:m=1";
    // kernel for single-distribution scans
    std::string kernel = "delta";
    double kernel_center = 0.0;
    // scan grid
    std::string grid = "default";
    std::string samples;
    std::vector<double> line_points{-1.0, -0.5, 0.0, 0.5, 1.0};
    // thresholds and ladders
    LadderConfig ladder;
    double ang_tol = 3.0;
    double cone_tol = 1e-6;
    double quad_tol = 1e-8;
    double spec_tol = 1e-6;
    double max_inconclusive = 0.5;
    // acs
    std::string acs_model = "weyl";
    int order = 2;
    double mu = 1.0;
    AcsOptions acs;
    double epsilon = 1e-4;
    // gacs
    CovectorPoint gacs_q{Vec2::Zero(), Vec2(-1.0, 1.0)};
    CovectorPoint gacs_qp{Vec2(1.0, 1.0), Vec2(1.0, -1.0)};
    double symbol_s = 1.0;
    double symbol_a = 2.0;
    double profile_radius = 0.2;
    double symbol_envelope = 0.25;
    double neighbourhood = 0.02;
    // spectral residual
    std::vector<Vec2> spectral_probes{Vec2(-4.0, 1.0), Vec2(-4.0, -1.0), Vec2(-5.0, 2.0), Vec2(-6.0, 0.0),
                                      Vec2(-3.5, 0.5), Vec2(std::sqrt(2.0), 1.0), Vec2(std::sqrt(5.0), -2.0)};
    double spectral_width = 2.0;
    double spectral_amplitude = 0.2;
    // musc
    ConeVariant variant = ConeVariant::lightlike_geodesic;
    std::string report_in;
    // output and run control
    std::string out_dir = ".";
    std::string report_name;
    bool write_ladders = true;
    int workers = 0;  // 0 keeps the OpenMP default
    unsigned seed = 7;
    std::string expect;

    SpacetimeModel model() const;
    StateDescriptor state_descriptor() const;
    StateOptions state_options() const;
    /// Resolved values of every known key.
    json to_json() const;
};

/// Validates keys and values; thresholds must be positive. `env_workers`
/// (the MICROSPEC_WORKERS value, if any) replaces run.workers unless that key
/// was set on the command line.
RunConfig resolve_run_config(const Config& c, const std::optional<std::string>& env_workers = {},
                             bool workers_from_flag = false);

/// Scan tasks as JSON: [{"points": [[t, x], ...], "xis": [[k0, k1], ...]}, ...].
std::vector<ScanTask> tasks_from_json(const json& j, int dim);
json tasks_to_json(const std::vector<ScanTask>& tasks, int dim);

}  // namespace microspec

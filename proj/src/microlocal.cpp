#include "microspec/microlocal.hpp"

#include <optional>

#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "microspec/errors.hpp"

namespace microspec {

namespace {

double radical_inverse(unsigned n, unsigned base) {
    double inv = 1.0 / base, f = inv, r = 0.0;
    while (n > 0) {
        r += f * (n % base);
        n /= base;
        f *= inv;
    }
    return r;
}

Vec2 slot_vector(const VecX& k, int slot, int dim) {
    Vec2 out = Vec2::Zero();
    for (int d = 0; d < dim; ++d)
        out[d] = k[slot * dim + d];
    return out;
}

bool box_inside(const Box& inner, const Box& outer, int dim) {
    for (int d = 0; d < dim; ++d)
        if (inner.lo[d] < outer.lo[d] || inner.hi[d] > outer.hi[d])
            return false;
    return true;
}

TestFunction random_test_function(int dim, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const Vec2 c(0.5 * U(rng), dim == 2 ? 0.5 * U(rng) : 0.0);
    const Vec2 q(5.0 * U(rng), dim == 2 ? 5.0 * U(rng) : 0.0);
    return TestFunction::bump(dim, c, 0.35 + 0.15 * U(rng), q, cplx(U(rng), U(rng)));
}

json vec_json(const Vec2& v, int dim) {
    json a = json::array();
    for (int d = 0; d < dim; ++d)
        a.push_back(v[d]);
    return a;
}

Vec2 vec_from_json(const json& a) {
    Vec2 v = Vec2::Zero();
    for (std::size_t d = 0; d < a.size() && d < 2; ++d)
        v[d] = a[d].get<double>();
    return v;
}

std::vector<double> task_key(const ScanTask& t) {
    std::vector<double> key;
    for (const CovectorPoint& p : t.points) {
        key.insert(key.end(), {p.base[0], p.base[1], p.xi[0], p.xi[1]});
    }
    return key;
}

std::vector<ReportEntry> scan_all(const SmearableKernel& v, const std::vector<ScanTask>& tasks,
                                  const LadderConfig& cfg, Execution mode) {
    std::vector<ReportEntry> out(tasks.size());
    parallel_map(static_cast<int>(tasks.size()),
                 [&](int i) { out[i] = scan_entry(v, tasks[i], cfg); }, mode);
    return out;
}

Mat2 effective_map(const Mat2& a, int dim) {
    if (dim == 2)
        return a;
    Mat2 m = Mat2::Identity();
    m(0, 0) = a(0, 0);
    return m;
}

}  // namespace

cplx SmearableKernel::pair(const std::vector<TestFunction>& fs) const {
    if (static_cast<int>(fs.size()) != arity)
        throw std::invalid_argument("pairing arity mismatch for kernel " + name);
    return arity == 1 ? pair1(fs[0]) : pair2(fs[0], fs[1]);
}

double linearity_defect(const SmearableKernel& v, int trials, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        std::vector<TestFunction> base;
        for (int s = 0; s < v.arity; ++s)
            base.push_back(random_test_function(v.dim, rng));
        for (int slot = 0; slot < v.arity; ++slot) {
            const TestFunction f = random_test_function(v.dim, rng);
            const TestFunction g = random_test_function(v.dim, rng);
            const cplx a(U(rng), U(rng)), b(U(rng), U(rng));
            auto with = [&](const TestFunction& h) {
                std::vector<TestFunction> args = base;
                args[slot] = h;
                return v.pair(args);
            };
            const cplx vf = with(f), vg = with(g);
            const cplx combo = with(f.scaled(a) + g.scaled(b));
            const double scale = std::abs(a * vf) + std::abs(b * vg);
            if (scale > 0.0)
                worst = std::max(worst, std::abs(combo - a * vf - b * vg) / scale);
            else
                worst = std::max(worst, std::abs(combo));
        }
    }
    return worst;
}

TestFunction window_function(const Window& w, int dim, const Vec2& k) {
    Vec2 q = -k;
    if (dim == 1)
        q[1] = 0.0;
    return TestFunction::bump(dim, w.center, w.radius, q);
}

json to_json(const LadderConfig& c) {
    return json{{"R0", c.R0},
                {"J", c.J},
                {"order_min", c.order_min},
                {"order_singular_max", c.order_singular_max},
                {"fit_quality_min", c.fit_quality_min},
                {"abs_floor", c.abs_floor},
                {"tail", c.tail},
                {"cone_half_angle_deg", c.cone_half_angle_deg},
                {"net_size", c.net_size},
                {"net_size_arity2", c.net_size_arity2},
                {"window_radius", c.window_radius},
                {"window_min", c.window_min}};
}

LadderConfig ladder_config_from_json(const json& j) {
    LadderConfig c;
    c.R0 = j.value("R0", c.R0);
    c.J = j.value("J", c.J);
    c.order_min = j.value("order_min", c.order_min);
    c.order_singular_max = j.value("order_singular_max", c.order_singular_max);
    c.fit_quality_min = j.value("fit_quality_min", c.fit_quality_min);
    c.abs_floor = j.value("abs_floor", c.abs_floor);
    c.tail = j.value("tail", c.tail);
    c.cone_half_angle_deg = j.value("cone_half_angle_deg", c.cone_half_angle_deg);
    c.net_size = j.value("net_size", c.net_size);
    c.net_size_arity2 = j.value("net_size_arity2", c.net_size_arity2);
    c.window_radius = j.value("window_radius", c.window_radius);
    c.window_min = j.value("window_min", c.window_min);
    return c;
}

const char* to_string(Verdict v) {
    switch (v) {
    case Verdict::regular: return "regular";
    case Verdict::singular: return "singular";
    case Verdict::inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

Verdict verdict_from_string(const std::string& s) {
    if (s == "regular")
        return Verdict::regular;
    if (s == "singular")
        return Verdict::singular;
    if (s == "inconclusive")
        return Verdict::inconclusive;
    throw std::invalid_argument("unknown verdict '" + s + "'");
}

DecayLadder classify_ladder(std::vector<double> scales, std::vector<double> amplitudes,
                            const LadderConfig& cfg) {
    DecayLadder d;
    d.scales = std::move(scales);
    d.amplitudes = std::move(amplitudes);
    const int n = static_cast<int>(d.amplitudes.size());
    std::vector<int> active;
    for (int i = 0; i < n; ++i)
        if (d.amplitudes[i] >= cfg.abs_floor)
            active.push_back(i);
    if (active.empty()) {
        d.slope = cfg.order_min;
        d.r2 = 1.0;
        d.verdict = Verdict::regular;
        d.annotation = "floor";
        return d;
    }
    const int tail = std::max(2, cfg.tail);
    const int last = active.back();
    const int na = static_cast<int>(active.size());
    auto fit_tail = [&](int keep, bool censor) {
        std::vector<double> x, y;
        for (int i = std::max(0, na - keep); i < na; ++i) {
            x.push_back(std::log(d.scales[active[i]]));
            y.push_back(std::log(d.amplitudes[active[i]]));
        }
        if (censor) {
            x.push_back(std::log(d.scales[last + 1]));
            y.push_back(std::log(cfg.abs_floor));
        }
        return x.size() < 2 ? std::optional<LineFit>() : std::optional<LineFit>(fit_line(x, y));
    };
    // The first floored rung, censored at the floor, bounds the decay from
    // below; the larger of that bound and the plain tail fit is kept.
    std::optional<LineFit> fit = fit_tail(tail, false);
    if (last + 1 < n) {
        const std::optional<LineFit> cens = fit_tail(tail - 1, true);
        if (!fit || cens->slope < fit->slope) {
            fit = cens;
            d.annotation = "censored";
        }
    }
    if (!fit) {
        d.verdict = Verdict::inconclusive;
        d.annotation = "too few rungs";
        return d;
    }
    d.slope = -fit->slope;
    d.r2 = fit->r2;
    if (d.slope >= cfg.order_min && d.r2 >= cfg.fit_quality_min)
        d.verdict = Verdict::regular;
    else if (d.slope < cfg.order_singular_max)
        d.verdict = Verdict::singular;
    else
        d.verdict = Verdict::inconclusive;
    return d;
}

std::vector<VecX> cone_net(const VecX& direction, double half_angle_rad, int n) {
    const int m = static_cast<int>(direction.size());
    const VecX d = direction.normalized();
    std::vector<VecX> basis;
    for (int e = 0; e < m && static_cast<int>(basis.size()) < m - 1; ++e) {
        VecX v = VecX::Unit(m, e);
        v -= v.dot(d) * d;
        for (const VecX& b : basis)
            v -= v.dot(b) * b;
        if (v.norm() > 1e-8)
            basis.push_back(v.normalized());
    }
    static constexpr unsigned primes[] = {3, 5, 7, 11, 13};
    const double reach = std::tan(half_angle_rad) / std::sqrt(std::max<std::size_t>(1, basis.size()));
    std::vector<VecX> net;
    net.reserve(n);
    for (int i = 0; i < n; ++i) {
        VecX v = d;
        if (i > 0) {
            for (std::size_t b = 0; b < basis.size(); ++b)
                v += reach * (2.0 * radical_inverse(i, primes[b % 5]) - 1.0) * basis[b];
            v.normalize();
        }
        net.push_back(v * (1.0 + radical_inverse(i, 2)));
    }
    return net;
}

cplx windowed_transform(const SmearableKernel& v, const std::vector<Window>& windows, const VecX& k) {
    if (static_cast<int>(windows.size()) != v.arity || k.size() != v.arity * v.dim)
        throw std::invalid_argument("windowed_transform: window/frequency shape mismatch");
    std::vector<TestFunction> fs;
    for (int s = 0; s < v.arity; ++s) {
        TestFunction f = window_function(windows[s], v.dim, slot_vector(k, s, v.dim));
        if (!box_inside(f.support(), v.domain, v.dim))
            throw DomainError("window support leaves the chart domain");
        fs.push_back(std::move(f));
    }
    return v.pair(fs);
}

DecayLadder direction_ladder(const SmearableKernel& v, const std::vector<Window>& windows,
                             const VecX& direction, const LadderConfig& cfg) {
    if (cfg.J < 3)
        throw std::invalid_argument("direction_ladder: need at least 4 rungs");
    if (!(cfg.cone_half_angle_deg > 0.0))
        throw std::invalid_argument("direction_ladder: cone half-angle must be positive");
    const int n = v.arity == 1 ? cfg.net_size : cfg.net_size_arity2;
    const std::vector<VecX> net = cone_net(direction, cfg.cone_half_angle_deg * kPi / 180.0, n);
    const double unit = 1.0 / windows.front().radius;
    std::vector<double> scales, amps;
    for (int j = 0; j <= cfg.J; ++j) {
        const double R = cfg.R0 * std::ldexp(1.0, j) * unit;
        double best = 0.0;
        for (const VecX& p : net)
            best = std::max(best, std::abs(windowed_transform(v, windows, R * p)));
        scales.push_back(R);
        amps.push_back(best);
    }
    return classify_ladder(std::move(scales), std::move(amps), cfg);
}

std::vector<ScanTask> product_grid(const std::vector<std::vector<Vec2>>& point_tuples,
                                   const std::vector<std::vector<Vec2>>& direction_tuples) {
    std::vector<ScanTask> tasks;
    for (const auto& pts : point_tuples)
        for (const auto& dirs : direction_tuples) {
            if (pts.size() != dirs.size())
                throw std::invalid_argument("product_grid: point and direction tuple sizes differ");
            ScanTask t;
            for (std::size_t s = 0; s < pts.size(); ++s)
                t.points.push_back({pts[s], dirs[s]});
            tasks.push_back(std::move(t));
        }
    return tasks;
}

int SpectrumReport::count(Verdict v) const {
    int c = 0;
    for (const ReportEntry& e : entries)
        c += e.verdict() == v;
    return c;
}

json report_to_json(const SpectrumReport& r) {
    json entries = json::array();
    for (const ReportEntry& e : r.entries) {
        json pts = json::array(), xis = json::array();
        for (const CovectorPoint& p : e.points) {
            pts.push_back(vec_json(p.base, r.dim));
            xis.push_back(vec_json(p.xi, r.dim));
        }
        entries.push_back({{"points", pts},
                           {"xis", xis},
                           {"slope", e.ladder.slope},
                           {"r2", e.ladder.r2},
                           {"verdict", to_string(e.verdict())},
                           {"test", e.test},
                           {"radius", e.radius},
                           {"annotation", e.ladder.annotation},
                           {"scales", e.ladder.scales},
                           {"amplitudes", e.ladder.amplitudes}});
    }
    json j = {{"schema", 1},
              {"version", MICROSPEC_VERSION},
              {"kernel", r.kernel},
              {"arity", r.arity},
              {"dim", r.dim},
              {"config", r.config},
              {"decay_criterion",
               "tail slope >= order_min with r2 >= fit_quality_min stands in for rapid decay"},
              {"counts",
               {{"regular", r.count(Verdict::regular)},
                {"singular", r.count(Verdict::singular)},
                {"inconclusive", r.count(Verdict::inconclusive)}}},
              {"entries", entries}};
    for (auto it = r.extra.begin(); it != r.extra.end(); ++it)
        j[it.key()] = it.value();
    return j;
}

SpectrumReport report_from_json(const json& j) {
    if (j.value("schema", 0) != 1)
        throw ConfigError("report: unsupported schema");
    SpectrumReport r;
    r.kernel = j.at("kernel").get<std::string>();
    r.arity = j.at("arity").get<int>();
    r.dim = j.at("dim").get<int>();
    r.config = j.at("config");
    static const std::set<std::string> known = {"schema", "version", "kernel", "arity", "dim",
                                                "config", "decay_criterion", "counts", "entries"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key()))
            r.extra[it.key()] = it.value();
    for (const json& e : j.at("entries")) {
        ReportEntry entry;
        const json& pts = e.at("points");
        const json& xis = e.at("xis");
        for (std::size_t s = 0; s < pts.size(); ++s)
            entry.points.push_back({vec_from_json(pts[s]), vec_from_json(xis[s])});
        entry.ladder.slope = e.at("slope").get<double>();
        entry.ladder.r2 = e.at("r2").get<double>();
        entry.ladder.verdict = verdict_from_string(e.at("verdict").get<std::string>());
        entry.ladder.annotation = e.value("annotation", "");
        entry.ladder.scales = e.value("scales", std::vector<double>{});
        entry.ladder.amplitudes = e.value("amplitudes", std::vector<double>{});
        entry.test = e.at("test").get<std::string>();
        entry.radius = e.value("radius", 0.0);
        r.entries.push_back(std::move(entry));
    }
    return r;
}

std::string ladder_csv(const DecayLadder& d) {
    std::ostringstream os;
    os.precision(17);
    os << "scale,amplitude\n";
    for (std::size_t i = 0; i < d.scales.size(); ++i)
        os << d.scales[i] << ',' << d.amplitudes[i] << '\n';
    return os.str();
}

ReportEntry scan_entry(const SmearableKernel& v, const ScanTask& task, const LadderConfig& cfg) {
    if (static_cast<int>(task.points.size()) != v.arity)
        throw std::invalid_argument("scan task arity mismatch for kernel " + v.name);
    VecX dir(v.arity * v.dim);
    for (int s = 0; s < v.arity; ++s)
        for (int d = 0; d < v.dim; ++d)
            dir[s * v.dim + d] = task.points[s].xi[d];
    if (dir.norm() == 0.0)
        throw std::invalid_argument("scan task with zero direction");
    ReportEntry e;
    e.points = task.points;
    e.test = "windowed-fourier";
    double radius = cfg.window_radius;
    for (;;) {
        std::vector<Window> windows;
        for (const CovectorPoint& p : task.points)
            windows.push_back({p.base, radius});
        e.ladder = direction_ladder(v, windows, dir, cfg);
        e.radius = radius;
        if (e.verdict() != Verdict::inconclusive || 0.5 * radius < cfg.window_min * (1.0 - 1e-12))
            break;
        radius *= 0.5;
    }
    return e;
}

SpectrumReport estimate_wavefront(const SmearableKernel& v, const std::vector<ScanTask>& tasks,
                                  const LadderConfig& cfg, Execution mode) {
    std::vector<ScanTask> unique;
    std::set<std::vector<double>> seen;
    for (const ScanTask& t : tasks)
        if (seen.insert(task_key(t)).second)
            unique.push_back(t);
    SpectrumReport r;
    r.kernel = v.name;
    r.arity = v.arity;
    r.dim = v.dim;
    r.config = {{"ladder", to_json(cfg)}};
    r.entries = scan_all(v, unique, cfg, mode);
    return r;
}

std::vector<Vec2> singular_support(const SpectrumReport& r) {
    std::vector<Vec2> out;
    for (const ReportEntry& e : r.entries) {
        if (e.verdict() != Verdict::singular)
            continue;
        const Vec2& p = e.points.front().base;
        bool dup = false;
        for (const Vec2& q : out)
            dup = dup || (q - p).norm() == 0.0;
        if (!dup)
            out.push_back(p);
    }
    return out;
}

SmearableKernel pullback(const SmearableKernel& v, const Mat2& a) {
    const Mat2 m = effective_map(a, v.dim);
    const Mat2 inv = m.inverse();
    const double jac = 1.0 / std::abs(m.determinant());
    SmearableKernel out = v;
    out.name = v.name + " pulled back";
    out.spectral = nullptr;
    auto push = [inv, jac](const TestFunction& f) { return f.pulled_back(inv).scaled(jac); };
    if (v.arity == 1) {
        out.pair1 = [v, push](const TestFunction& f) { return v.pair1(push(f)); };
    } else {
        out.pair2 = [v, push](const TestFunction& f, const TestFunction& h) {
            return v.pair2(push(f), push(h));
        };
    }
    // Preimage of the domain box under x -> m x.
    Box dom;
    bool first = true;
    for (int c = 0; c < 4; ++c) {
        const Vec2 corner((c & 1) ? v.domain.hi[0] : v.domain.lo[0],
                          (c & 2) ? v.domain.hi[1] : v.domain.lo[1]);
        const Vec2 p = inv * corner;
        dom.lo = first ? p : dom.lo.cwiseMin(p);
        dom.hi = first ? p : dom.hi.cwiseMax(p);
        first = false;
    }
    out.domain = dom;
    return out;
}

CovarianceResult transform_covariance_check(const SmearableKernel& v, const Mat2& a,
                                            const std::vector<ScanTask>& tasks,
                                            const LadderConfig& cfg, Execution mode) {
    const Mat2 m = effective_map(a, v.dim);
    const Mat2 cot = m.inverse().transpose();
    std::vector<ScanTask> mapped = tasks;
    for (ScanTask& t : mapped)
        for (CovectorPoint& p : t.points) {
            p.base = m * p.base;
            p.xi = cot * p.xi;
        }
    const SmearableKernel pulled = pullback(v, a);
    const auto lhs = scan_all(pulled, tasks, cfg, mode);
    const auto rhs = scan_all(v, mapped, cfg, mode);
    CovarianceResult res;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const Verdict x = lhs[i].verdict(), y = rhs[i].verdict();
        if (!conclusive(x) || !conclusive(y))
            continue;
        ++res.compared;
        if (x != y) {
            ++res.score;
            std::ostringstream os;
            os << "entry " << i << ": pulled-back " << to_string(x) << " vs mapped " << to_string(y);
            res.mismatches.push_back(os.str());
        }
    }
    return res;
}

SmearableKernel apply_operator(const SmearableKernel& v, const DiffPoly& a, int slot) {
    if (slot < 0 || slot >= v.arity)
        throw std::invalid_argument("apply_operator: slot out of range");
    const DiffPoly at = a.transpose();
    SmearableKernel out = v;
    out.name = v.name + " with operator";
    out.spectral = nullptr;
    if (v.arity == 1) {
        out.pair1 = [v, at](const TestFunction& f) { return v.pair1(f.apply(at)); };
    } else if (slot == 0) {
        out.pair2 = [v, at](const TestFunction& f, const TestFunction& h) {
            return v.pair2(f.apply(at), h);
        };
    } else {
        out.pair2 = [v, at](const TestFunction& f, const TestFunction& h) {
            return v.pair2(f, h.apply(at));
        };
    }
    return out;
}

ShrinkResult operator_shrink_check(const SmearableKernel& v, const DiffPoly& a,
                                   const std::vector<ScanTask>& tasks, const LadderConfig& cfg,
                                   int slot, Execution mode) {
    ShrinkResult res;
    res.base = estimate_wavefront(v, tasks, cfg, mode);
    res.applied = estimate_wavefront(apply_operator(v, a, slot), tasks, cfg, mode);
    for (std::size_t i = 0; i < res.applied.entries.size(); ++i)
        if (res.applied.entries[i].verdict() == Verdict::singular &&
            res.base.entries[i].verdict() == Verdict::regular)
            ++res.violations;
    res.contained = res.violations == 0;
    return res;
}

}  // namespace microspec

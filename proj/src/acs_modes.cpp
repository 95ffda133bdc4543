#include <cmath>
#include <limits>

#include "acs_detail.hpp"
#include "microspec/errors.hpp"

namespace microspec::detail {

namespace {

constexpr double kBig = std::numeric_limits<double>::infinity();

double omega_of(double k, double m) { return std::sqrt(k * k + m * m); }

double dist_to(double v, double lo, double hi) { return v < lo ? lo - v : (v > hi ? v - hi : 0.0); }

struct TermBox {
    const TestTerm* t = nullptr;
    int dim = 2;
    Vec2 lo, hi, spread;
    double det = 1.0;
    double env_rate = 0.0;
};

TermBox term_box(const TestTerm& t, int dim) {
    TermBox b;
    b.t = &t;
    b.dim = dim;
    Mat2 shape = t.shape;
    if (dim == 1) {
        shape(0, 1) = shape(1, 0) = 0.0;
        shape(1, 1) = 1.0;
    }
    const double c = envelope_cutoff(t.envelope);
    for (int i = 0; i < 2; ++i)
        b.spread[i] = std::abs(shape(0, i)) + std::abs(shape(1, i));
    b.lo = t.modulation - c * b.spread;
    b.hi = t.modulation + c * b.spread;
    b.det = std::abs(dim == 2 ? shape.determinant() : shape(0, 0));
    b.env_rate = dim == 2 ? shape.inverse().cwiseAbs().rowwise().sum().maxCoeff() : 1.0 / std::abs(shape(0, 0));
    return b;
}

struct Prepared {
    Factor f;
    std::vector<TermBox> terms;
};

// k with omega(k) in [a, b].
IntervalSet shell_set(double a, double b, double m) {
    a = std::max(a, m);
    if (!(b >= a))
        return {};
    const double klo = std::sqrt(std::max(0.0, a * a - m * m));
    const double khi = std::isfinite(b) ? std::sqrt(b * b - m * m) : kBig;
    return normalized({{-khi, -klo}, {klo, khi}});
}

IntervalSet affine_preimage(int coef, double shift, double lo, double hi) {
    if (coef == 0)
        return (shift >= lo && shift <= hi) ? whole_line() : IntervalSet{};
    double a = (lo - shift) / coef, b = (hi - shift) / coef;
    if (a > b)
        std::swap(a, b);
    return {{a, b}};
}

IntervalSet term_domain(const TermBox& b, const Factor& f, double m) {
    IntervalSet set;
    if (f.s == 0) {
        set = (f.shift[0] >= b.lo[0] && f.shift[0] <= b.hi[0]) ? whole_line() : IntervalSet{};
    } else {
        double a = (b.lo[0] - f.shift[0]) / f.s, c = (b.hi[0] - f.shift[0]) / f.s;
        if (a > c)
            std::swap(a, c);
        set = shell_set(a, c, m);
    }
    if (b.dim == 2)
        set = intersect(set, affine_preimage(f.t, f.shift[1], b.lo[1], b.hi[1]));
    return set;
}

IntervalSet factor_domain(const Prepared& p, double m) {
    IntervalSet u;
    for (const TermBox& b : p.terms)
        for (const Interval& iv : term_domain(b, p.f, m))
            u.push_back(iv);
    return normalized(u);
}

double term_bound(const TermBox& b, const Factor& f, double m, double k0, double k1) {
    const double kmin = (k0 <= 0.0 && k1 >= 0.0) ? 0.0 : std::min(std::abs(k0), std::abs(k1));
    const double kmax = std::max(std::abs(k0), std::abs(k1));
    double q0a = f.s * omega_of(kmin, m) + f.shift[0], q0b = f.s * omega_of(kmax, m) + f.shift[0];
    if (q0a > q0b)
        std::swap(q0a, q0b);
    double kap = dist_to(b.t->modulation[0], q0a, q0b) / b.spread[0];
    double q1max = 0.0;
    if (b.dim == 2) {
        double q1a = f.t * k0 + f.shift[1], q1b = f.t * k1 + f.shift[1];
        if (q1a > q1b)
            std::swap(q1a, q1b);
        kap = std::max(kap, dist_to(b.t->modulation[1], q1a, q1b) / b.spread[1]);
        q1max = std::max(std::abs(q1a), std::abs(q1b));
    }
    double env = envelope_axis_bound(b.t->envelope, kap);
    if (b.dim == 2)
        env *= envelope_axis_bound(b.t->envelope, 0.0);
    const double q0max = std::max(std::abs(q0a), std::abs(q0b));
    return std::abs(b.t->coef) * b.t->diff.symbol_bound(q0max, q1max) * env / b.det;
}

Vec2 argument(const Factor& f, double w, double k) { return Vec2(f.s * w + f.shift[0], f.t * k + f.shift[1]); }

struct Plan {
    std::vector<Prepared> factors;
    IntervalSet domain;
    double width = 1.0;
    bool empty = false;
};

Plan make_plan(const std::vector<Factor>& fs, double m, bool magnitude) {
    Plan plan;
    plan.domain = whole_line();
    double rate = 0.0;
    for (const Factor& f : fs) {
        Prepared p{f, {}};
        const int dim = f.fn->dim();
        for (const TestTerm& t : f.fn->terms())
            p.terms.push_back(term_box(t, dim));
        if (p.terms.empty()) {
            plan.empty = true;
            return plan;
        }
        double r = 0.0;
        for (const TermBox& b : p.terms) {
            double tr = (std::abs(f.s) + (dim == 2 ? std::abs(f.t) : 0)) * b.env_rate;
            if (!magnitude)
                tr += std::abs(f.s * b.t->center[0]) + (dim == 2 ? std::abs(f.t * b.t->center[1]) : 0.0);
            r = std::max(r, tr);
        }
        rate += r;
        plan.domain = intersect(plan.domain, factor_domain(p, m));
        plan.factors.push_back(std::move(p));
    }
    for (const Interval& iv : plan.domain)
        if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi))
            throw IntegrationFailure("mode integral: no factor confines the momentum");
    plan.empty = plan.domain.empty();
    plan.width = std::min(3.0 / (rate + 0.3), m);
    return plan;
}

// Panels of geometrically growing width in |k|, for integrands without
// momentum-space oscillation whose support reaches far out.
IntervalSet geometric_panels(const IntervalSet& domain, double m) {
    IntervalSet out;
    auto side = [&](double a, double b, bool negative) {
        double lo = a;
        while (lo < b) {
            const double hi = std::min(b, std::max(lo + 0.25 * m, lo * 1.05));
            out.push_back(negative ? Interval{-hi, -lo} : Interval{lo, hi});
            lo = hi;
        }
    };
    for (const Interval& iv : domain) {
        if (iv.hi <= 0.0)
            side(-iv.hi, -iv.lo, true);
        else if (iv.lo >= 0.0)
            side(iv.lo, iv.hi, false);
        else {
            side(0.0, -iv.lo, true);
            side(0.0, iv.hi, false);
        }
    }
    return out;
}

template <class Eval>
cplx run_plan(const Plan& plan, const ModeChannel& ch, double m, double skip_tol, Eval&& eval,
              PanelStats* stats, bool smooth = false) {
    auto integrand = [&](double k) {
        const double w = omega_of(k, m);
        cplx v = ch.weight(w) / (4.0 * kPi * w);
        for (const Prepared& p : plan.factors) {
            v *= eval(p, argument(p.f, w, k));
            if (v == 0.0)
                break;
        }
        return v;
    };
    auto bound = [&](double k0, double k1) {
        const double kmin = (k0 <= 0.0 && k1 >= 0.0) ? 0.0 : std::min(std::abs(k0), std::abs(k1));
        double b = ch.weight_max / (4.0 * kPi * omega_of(kmin, m));
        for (const Prepared& p : plan.factors) {
            double fb = 0.0;
            for (const TermBox& t : p.terms)
                fb += term_bound(t, p.f, m, k0, k1);
            b *= fb;
            if (b == 0.0)
                break;
        }
        return b;
    };
    if (!smooth)
        return integrate_skipping(integrand, bound, plan.domain, plan.width, skip_tol, stats);
    cplx sum = 0.0;
    for (const Interval& iv : geometric_panels(plan.domain, m))
        sum += integrate_skipping(integrand, bound, IntervalSet{iv}, iv.length(), skip_tol, stats, 12, 1);
    return sum;
}

}  // namespace

cplx factor_integral(const ModeChannel& ch, double mass, const std::vector<Factor>& fs, double skip_tol,
                     bool smooth) {
    const Plan plan = make_plan(fs, mass, smooth);
    if (plan.empty)
        return 0.0;
    return run_plan(
        plan, ch, mass, skip_tol,
        [](const Prepared& p, const Vec2& q) { return p.f.fn->fourier(p.f.fn->dim() == 2 ? q : Vec2(q[0], 0.0)); },
        nullptr, smooth);
}

double factor_magnitude(const ModeChannel& ch, double mass, const std::vector<Factor>& fs, double skip_tol) {
    const Plan plan = make_plan(fs, mass, true);
    if (plan.empty)
        return 0.0;
    ModeChannel abs_ch = ch;
    abs_ch.weight = [w = ch.weight](double x) { return std::abs(w(x)); };
    const cplx v = run_plan(
        plan, abs_ch, mass, skip_tol,
        [](const Prepared& p, const Vec2& q) {
            const int dim = p.f.fn->dim();
            double s = 0.0;
            for (const TermBox& b : p.terms)
                s += std::abs(term_fourier(*b.t, dim, dim == 2 ? q : Vec2(q[0], 0.0)));
            return cplx(s);
        },
        nullptr, true);
    return v.real();
}

WeylExpansion::WeylExpansion(const QuasifreeState& state, std::vector<WeylSlot> slots, double skip_tol)
    : state_(&state), slots_(std::move(slots)), skip_tol_(skip_tol) {
    if (slots_.empty() || slots_.size() > 2)
        throw UnsupportedError("Weyl probes take one or two slots");
    for (const ModeChannel& ch : state.channels())
        (ch.sf + ch.sh == 0 ? diagonal_ : oscillating_).push_back(ch);
    const double m = state.mass();
    norm_ = 1.0;
    for (const WeylSlot& s : slots_)
        norm_ *= s.envelope.l1_norm();
    double x = 0.0;
    for (const WeylSlot& s : slots_) {
        if (s.element.empty())
            continue;
        for (const ModeChannel& ch : diagonal_)
            phi0_ += -0.5 * factor_integral(ch, m, {{&s.element, ch.sf, -1, Vec2::Zero()}, {&s.element, ch.sh, 1, Vec2::Zero()}},
                                            skip_tol_, true);
        for (const ModeChannel& ch : oscillating_)
            x += 0.5 * factor_magnitude(ch, m, {{&s.element, ch.sf, -1, Vec2::Zero()}, {&s.element, ch.sh, 1, Vec2::Zero()}},
                                        skip_tol_);
    }
    if (slots_.size() == 2 && !slots_[0].element.empty() && !slots_[1].element.empty())
        for (const ModeChannel& ch : state.channels())
            x += factor_magnitude(
                ch, m, {{&slots_[0].element, ch.sf, -1, Vec2::Zero()}, {&slots_[1].element, ch.sh, 1, Vec2::Zero()}},
                skip_tol_);
    remainder_ = std::exp(phi0_.real()) * 0.5 * x * x * std::exp(x);
}

cplx WeylExpansion::value(const std::vector<Vec2>& K) const {
    if (K.size() != slots_.size())
        throw std::invalid_argument("WeylExpansion: one frequency per slot");
    const double m = state_->mass();
    std::vector<cplx> hk;
    for (std::size_t j = 0; j < slots_.size(); ++j)
        hk.push_back(slots_[j].envelope.fourier(K[j]));
    cplx disconnected = 1.0;
    for (cplx v : hk)
        disconnected *= v;
    cplx connected = 0.0;
    for (std::size_t j = 0; j < slots_.size(); ++j) {
        const WeylSlot& s = slots_[j];
        if (s.element.empty())
            continue;
        cplx others = 1.0;
        for (std::size_t l = 0; l < slots_.size(); ++l)
            if (l != j)
                others *= hk[l];
        if (others == 0.0)
            continue;
        cplx self = 0.0;
        for (const ModeChannel& ch : oscillating_)
            self += factor_integral(ch, m,
                                    {{&s.element, ch.sf, -1, Vec2::Zero()},
                                     {&s.element, ch.sh, 1, Vec2::Zero()},
                                     {&s.envelope, ch.sf + ch.sh, 0, K[j]}},
                                    skip_tol_);
        connected += 0.5 * others * self;
    }
    if (slots_.size() == 2 && !slots_[0].element.empty() && !slots_[1].element.empty())
        for (const ModeChannel& ch : state_->channels())
            connected += factor_integral(ch, m,
                                         {{&slots_[0].element, ch.sf, -1, Vec2::Zero()},
                                          {&slots_[1].element, ch.sh, 1, Vec2::Zero()},
                                          {&slots_[0].envelope, ch.sf, -1, K[0]},
                                          {&slots_[1].envelope, ch.sh, 1, K[1]}},
                                         skip_tol_);
    return std::exp(phi0_) * (disconnected - connected) / norm_;
}

DecayLadder classify_with_remainder(const std::vector<double>& scales, const std::vector<double>& amps,
                                    const std::vector<double>& rems, const LadderConfig& cfg) {
    std::vector<double> shown(amps.size());
    bool untrusted = false, above_floor = false;
    for (std::size_t j = 0; j < amps.size(); ++j) {
        shown[j] = std::max(amps[j], rems[j]);
        untrusted = untrusted || !(amps[j] > 10.0 * rems[j]);
        above_floor = above_floor || rems[j] >= cfg.abs_floor;
    }
    DecayLadder d = classify_ladder(scales, shown, cfg);
    if (d.verdict == Verdict::regular && above_floor) {
        d.verdict = Verdict::inconclusive;
        d.annotation = "remainder above floor";
    } else if (d.verdict == Verdict::singular && untrusted) {
        bool tail_trusted = true;
        const std::size_t n = amps.size(), tail = static_cast<std::size_t>(std::max(2, cfg.tail));
        for (std::size_t j = n > tail ? n - tail : 0; j < n; ++j)
            tail_trusted = tail_trusted && amps[j] > 10.0 * rems[j];
        if (!tail_trusted) {
            d.verdict = Verdict::inconclusive;
            d.annotation = "remainder comparable to amplitude";
        }
    }
    return d;
}

}  // namespace microspec::detail

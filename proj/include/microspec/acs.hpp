#pragma once

#include <memory>
#include <string>
#include <vector>

#include "microspec/field_states.hpp"
#include "microspec/microlocal.hpp"

namespace microspec {

// ---------------------------------------------------------------------------
// Testing families

struct FamilyOptions {
    double region_radius = 0.5;  // O is the ball of this radius around p
    double lambda0 = 1.0;        // the element vanishes for lambda > lambda0
    Vec2 modulation = Vec2::Zero();  // element carries exp(i nu.x / lambda), or cos for real families
    bool real = false;
    std::string label;
};

/// lambda -> lambda^{-a} f((x - p) / lambda^mu) with optional modulation at
/// frequency nu / lambda. The profile f is centred at the origin.
class TestingFamily {
public:
    TestFunction element(double lambda) const;
    /// Localization, cutoff and seminorm checks on the sampled ladder; empty when all hold.
    std::vector<std::string> check_invariants(const std::vector<double>& lambdas) const;

    int dim() const { return profile_.dim(); }
    const Vec2& base() const { return base_; }
    double mu() const { return mu_; }
    double exponent() const { return a_; }
    /// Seminorm growth exponent s with sup_lambda lambda^s sigma(A_lambda) < inf.
    double growth() const { return s_; }
    const FamilyOptions& options() const { return opts_; }
    const std::string& label() const { return opts_.label; }

private:
    friend TestingFamily make_scaled_family(const TestFunction&, const Vec2&, double, double,
                                            const FamilyOptions&);
    TestFunction profile_;
    Vec2 base_ = Vec2::Zero();
    double mu_ = 1.0;
    double a_ = 0.0;
    double s_ = 0.0;
    FamilyOptions opts_;
};

/// Throws ConstructionError when the family fails its invariants on lambda = 2^-j, j = 0..12.
TestingFamily make_scaled_family(const TestFunction& f, const Vec2& p, double mu, double a,
                                 const FamilyOptions& opts = {});

// ---------------------------------------------------------------------------
// Functionals

enum class AlgebraKind { function_algebra, weyl_state };

/// The functional phi under test together with the translation action.
class FunctionalModel {
public:
    /// Test functions under pointwise product, phi = u.
    static FunctionalModel function_algebra(SmearableKernel u);
    /// Weyl algebra in a quasifree state; elements are Weyl monomials W(eps f_1)...W(eps f_n).
    static FunctionalModel weyl_state(std::shared_ptr<const QuasifreeState> state, double epsilon = 1e-4);

    AlgebraKind kind() const { return kind_; }
    int dim() const { return kind_ == AlgebraKind::function_algebra ? 1 : 2; }
    const SmearableKernel& kernel() const { return kernel_; }
    const QuasifreeState& state() const { return *state_; }
    double epsilon() const { return epsilon_; }
    std::string describe() const;

    /// phi(A_1 ... A_N): u(A_1) for the function algebra (N = 1), the Weyl
    /// correlation of the monomial W(eps A_1)...W(eps A_N) otherwise.
    cplx evaluate(const std::vector<TestFunction>& elements) const;
    /// alpha_x.
    TestFunction translate(const TestFunction& a, const Vec2& x) const { return a.translated(x); }
    /// Generator of the time flow used by stationary scans.
    Vec2 killing_field(const Vec2&) const { return Vec2(1.0, 0.0); }

private:
    AlgebraKind kind_ = AlgebraKind::function_algebra;
    SmearableKernel kernel_;
    std::shared_ptr<const QuasifreeState> state_;
    double epsilon_ = 1e-4;
};

// ---------------------------------------------------------------------------
// Probes

struct AcsOptions {
    LadderConfig ladder;            // thresholds shared with the wavefront scanner
    int j_min = 3, j_max = 10;      // lambda_j = 2^-j
    /// h is a bump of this radius in every translation variable; 0 selects
    /// 0.5 for the function algebra and 0.25 for the Weyl algebra.
    double envelope_radius = 0.0;
    int net = 5;
    std::vector<double> radii{0.2, 0.1};
    double region_radius = 0.5;
    int battery = 8;
    double skip_tol = 1e-24;
};

struct AcsQuery {
    int order = 1;
    double mu = 1.0;
    std::vector<CovectorPoint> points;
};

std::vector<double> lambda_ladder(const AcsOptions& opts);
double envelope_radius(const FunctionalModel& model, const AcsOptions& opts);

/// Ladder of sup-amplitudes of the oscillatory probe over a frequency net
/// around the query directions, one family per slot. Amplitudes are divided
/// by the L1 norm of the envelope.
DecayLadder acs_probe(const FunctionalModel& model, const AcsQuery& query,
                      const std::vector<TestingFamily>& families, const AcsOptions& opts = {});

/// The default battery for one slot.
std::vector<TestingFamily> family_battery(const FunctionalModel& model, const CovectorPoint& point,
                                          double mu, const AcsOptions& opts = {});

/// Regular only when every family tuple of the battery gives a regular
/// ladder, singular as soon as one gives a singular ladder. Two-slot probes
/// pair the i-th family of each slot.
SpectrumReport estimate_acs(const FunctionalModel& model, int order, double mu,
                            const std::vector<ScanTask>& samples, const AcsOptions& opts = {},
                            Execution mode = Execution::parallel);

struct EquivalenceResult {
    double score = 1.0;  // fraction of jointly conclusive entries that agree
    int compared = 0;
    int agreeing = 0;
    SpectrumReport acs;
    SpectrumReport wavefront;
    json to_json() const;
};

/// Compares order-1 ACS verdicts with the wavefront scanner on the same samples.
EquivalenceResult acs_wf_equivalence(const SmearableKernel& u, const std::vector<ScanTask>& samples,
                                     double mu, const AcsOptions& opts = {},
                                     const LadderConfig& wf = {}, Execution mode = Execution::parallel);

// ---------------------------------------------------------------------------
// Stationary scans

struct StationaryResult {
    std::string verdict;  // pass | FAIL
    SpectrumReport report;
    std::vector<int> singular_balanced;
    std::vector<int> singular_unbalanced;
    std::vector<int> violating_not_regular;  // xi'(X) <= 0 points that are not regular
    json to_json() const;
};

/// Probes along the time flow in each slot with phase sum_j t_j xi_j(X).
/// Throws DomainError when a sample covector annihilates X within ang_tol.
StationaryResult stationary_acs_scan(const FunctionalModel& model, double mu,
                                     const std::vector<ScanTask>& samples, const AcsOptions& opts = {},
                                     double ang_tol_deg = 3.0, double cone_tol = 1e-6,
                                     Execution mode = Execution::parallel);

// ---------------------------------------------------------------------------
// Testing symbols

/// A(x, xi; lambda) = int exp(-i xi.y) h(y) W(f_{x+y, lambda}) dy with
/// f_{x, lambda}(y') = eps lambda^{-a} f((y' - x) / lambda^s).
class WeylSymbol {
public:
    /// omega(A(x, xi; lambda)).
    cplx expectation(const Vec2& x, const Vec2& xi, double lambda) const;
    /// omega(A(x, xi; lambda) A'(x', xi'; lambda)).
    cplx correlation(const WeylSymbol& other, const Vec2& x, const Vec2& xi, const Vec2& xp,
                     const Vec2& xip, double lambda) const;
    bool is_zero() const { return h_.empty(); }
    const Vec2& base() const { return base_; }
    json to_json() const;

private:
    friend struct SymbolBuilder;
    std::shared_ptr<const QuasifreeState> state_;
    Vec2 base_ = Vec2::Zero();
    TestFunction h_{2};
    TestFunction f_{2};
    double s_ = 1.0;
    double a_ = 2.0;
    double epsilon_ = 1e-4;
    double skip_tol_ = 1e-24;
};

struct SymbolEstimate {
    bool passed = false;
    double m = 0.0;  // fitted order
    double C = 0.0;
    std::vector<std::string> notes;
    json to_json() const;
};

struct SymbolBuild {
    WeylSymbol symbol;
    SymbolEstimate estimate;
};

/// Throws std::invalid_argument for s < 1. The estimate checks
/// |omega(D_x^alpha D_xi^beta A(x, k / lambda; lambda))| <= C (1 + 1/lambda)^{m + |alpha| - |beta|}
/// by finite differences on the lambda ladder.
SymbolBuild build_weyl_symbol(std::shared_ptr<const QuasifreeState> state, const Vec2& p,
                              const TestFunction& h, const TestFunction& f, double s = 1.0,
                              double a = 2.0, double epsilon = 1e-4, const AcsOptions& opts = {});

/// Sup over a net in a neighbourhood of (p, xi; p', xi') of |omega(A(x, k/lambda) A'(x', k'/lambda))|.
DecayLadder gacs_probe(const WeylSymbol& a, const WeylSymbol& b, const CovectorPoint& q,
                       const CovectorPoint& qp, const AcsOptions& opts = {}, double neighbourhood = 0.02);

}  // namespace microspec

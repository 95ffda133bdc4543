#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <string>
#include <vector>

namespace microspec {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Open coordinate rectangle (t_lo, t_hi) x (x_lo, x_hi).
struct ChartDomain {
    double t_lo = -10.0, t_hi = 10.0;
    double x_lo = -10.0, x_hi = 10.0;
    bool contains(const Vec2& p) const {
        return p[0] > t_lo && p[0] < t_hi && p[1] > x_lo && p[1] < x_hi;
    }
};

enum class ModelKind { minkowski, conformal, general };

struct GeometryTolerances {
    double null_tol = 1e-9;
    double geo_tol = 1e-8;
    double bvp_tol = 1e-6;
    double transport_tol = 1e-8;
    double tilde_tol = 1e-6;
};

/// Two-dimensional Lorentzian chart with signature (+,-).
class SpacetimeModel {
public:
    using MetricFn = std::function<Mat2(const Vec2&)>;
    using VectorFn = std::function<Vec2(const Vec2&)>;

    static SpacetimeModel minkowski(const ChartDomain& domain = {});
    /// Metric omega2(t, x) * diag(1, -1); `expr` is kept for reports.
    static SpacetimeModel conformally_flat(std::function<double(double, double)> omega2,
                                           const ChartDomain& domain, std::string expr = "");
    static SpacetimeModel conformally_flat(const std::string& expr, const ChartDomain& domain);
    static SpacetimeModel general(MetricFn metric, const ChartDomain& domain,
                                  VectorFn orientation = nullptr);

    ModelKind kind() const { return kind_; }
    const ChartDomain& domain() const { return domain_; }
    const std::string& expression() const { return expr_; }

    Mat2 metric(const Vec2& p) const;
    Mat2 inverse_metric(const Vec2& p) const { return metric(p).inverse(); }
    Vec2 orientation(const Vec2& p) const;
    /// Christoffel symbols, gamma[a](b, c) = Gamma^a_{bc}.
    std::array<Mat2, 2> christoffel(const Vec2& p) const;

    /// Checks signature and orientation on an n x n sample grid; throws ConstructionError.
    void check_invariants(int n = 9) const;

private:
    ModelKind kind_ = ModelKind::minkowski;
    ChartDomain domain_;
    MetricFn metric_;
    VectorFn orientation_;
    std::function<double(double, double)> omega2_;
    std::string expr_;
};

struct CovectorPoint {
    Vec2 base = Vec2::Zero();
    Vec2 xi = Vec2::Zero();
};

enum class CausalClass { null_future, null_past, timelike_future, timelike_past, spacelike };

const char* to_string(CausalClass c);
bool is_causal(CausalClass c);
bool is_future(CausalClass c);

/// Throws DomainError when the covector is null and annihilates w.
CausalClass classify_covector(const SpacetimeModel& model, const CovectorPoint& cp,
                              double null_tol = 1e-9);

enum class CurveClass { timelike, null, spacelike, mixed, degenerate };
const char* to_string(CurveClass c);

struct GeodesicSegment {
    double a = 0.0, b = 1.0;
    std::vector<Vec2> points;
    std::vector<Vec2> tangents;
    bool affine = true;
    bool truncated = false;
    CurveClass causal = CurveClass::degenerate;

    double step() const { return points.size() > 1 ? (b - a) / (points.size() - 1) : 0.0; }
    GeodesicSegment reversed() const;
    Vec2 start() const { return points.front(); }
    Vec2 end() const { return points.back(); }
};

/// Degenerate (point) curve at p.
GeodesicSegment point_segment(const Vec2& p);
/// Straight segment p -> q sampled with n intervals, tangents q - p.
GeodesicSegment straight_segment(const Vec2& p, const Vec2& q, int n = 16);

/// `min_steps` forces at least that many integration steps.
GeodesicSegment geodesic_ivp(const SpacetimeModel& model, const Vec2& start, const Vec2& velocity,
                             double a, double b, const GeometryTolerances& tol = {},
                             int min_steps = 0);

/// Finite-difference geodesic residual at interior samples (max norm).
double geodesic_residual(const SpacetimeModel& model, const GeodesicSegment& seg);
/// Max of |g(gamma', gamma')| relative to |gamma'|^2 along the curve.
double null_residual(const SpacetimeModel& model, const GeodesicSegment& seg);

struct BvpResult {
    std::vector<GeodesicSegment> connectors;  // parametrized on [0, 1], gamma(0)=p, gamma(1)=q
    std::vector<std::string> warnings;
};

BvpResult geodesic_bvp(const SpacetimeModel& model, const Vec2& p, const Vec2& q, bool null_only,
                       const GeometryTolerances& tol = {});

/// Transports a covector given at seg.start() to seg.end().
Vec2 parallel_transport(const SpacetimeModel& model, const GeodesicSegment& seg, const Vec2& xi);

/// Covector scaled so that |xi(w)| = 1 (unchanged when xi(w) = 0).
Vec2 normalize_by_orientation(const SpacetimeModel& model, const Vec2& base, const Vec2& xi);

bool related_by_tilde(const SpacetimeModel& model, const CovectorPoint& a, const CovectorPoint& b,
                      const GeometryTolerances& tol = {});

/// Ball in chart coordinates, or a polygon when produced by a curved exponential chart.
struct Neighborhood {
    Vec2 center = Vec2::Zero();
    double radius = 1.0;
    std::vector<Vec2> polygon;  // empty for a ball

    bool is_ball() const { return polygon.empty(); }
    bool contains(const Vec2& x) const;
};

Neighborhood scaled_neighborhood(const SpacetimeModel& model, const Vec2& p, const Neighborhood& o,
                                 double lambda, double mu, const GeometryTolerances& tol = {});

}  // namespace microspec

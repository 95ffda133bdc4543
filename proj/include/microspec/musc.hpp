#pragma once

#include <optional>
#include <string>
#include <vector>

#include "microspec/geometry.hpp"
#include "microspec/microlocal.hpp"

namespace microspec {

enum class ConeVariant { smooth_curves, lightlike_geodesic, minkowski_straight };
const char* to_string(ConeVariant v);
ConeVariant cone_variant_from_string(const std::string& s);

struct ImmersionEdge {
    int source = 0;
    int target = 0;
    Vec2 covector = Vec2::Zero();  // at the source vertex
    GeodesicSegment curve;         // source -> target
};

struct ImmersionGraph {
    std::vector<Vec2> vertices;
    std::vector<ImmersionEdge> edges;

    /// Sum of the edge covectors leaving vertex i.
    Vec2 balance(int i) const;
    json to_json() const;
};

struct ImmersionCheck {
    bool valid = true;
    std::vector<std::string> violations;
    bool degenerate_curves = false;
};

/// Opposition closure, transport consistency and causality. The lightlike and
/// straight variants add their curve conditions on top.
ImmersionCheck validate_immersion(const SpacetimeModel& model, const ImmersionGraph& g,
                                  ConeVariant variant = ConeVariant::smooth_curves,
                                  const GeometryTolerances& tol = {});

struct ConeQuery {
    std::vector<CovectorPoint> points;
    ConeVariant variant = ConeVariant::minkowski_straight;

    json to_json() const;
};

enum class Membership { inside, outside, inconclusive };
const char* to_string(Membership m);

struct MembershipOptions {
    double cone_tol = 1e-6;
    GeometryTolerances geometry;
};

struct MembershipResult {
    Membership verdict = Membership::inconclusive;
    double residual = 0.0;  // after max-component normalization
    std::optional<ImmersionGraph> witness;
    bool degenerate_curves = false;
    std::vector<std::string> notes;

    json to_json(const ConeQuery& q) const;
};

/// Covector-balance search over graphs with at most one edge pair per vertex
/// pair, m in {2, 3}. Throws UnsupportedError for other sizes or the
/// smooth-curve variant, DomainError when every covector vanishes.
MembershipResult gamma_membership(const SpacetimeModel& model, const ConeQuery& q,
                                  const MembershipOptions& opts = {});

/// Two-point straight cone: xi_2 future causal, xi_1 + xi_2 = 0, and the
/// segment p_1 p_2 causal or a point.
Membership gamma0_closed_form(const ConeQuery& q, double cone_tol = 1e-6);

struct ContainmentResult {
    std::string verdict;  // pass | FAIL
    int checked = 0;
    std::vector<int> inside;
    std::vector<int> outside;
    std::vector<int> inconclusive;
    bool degenerate_curves = false;
    std::vector<MembershipResult> memberships;  // one per checked entry

    json to_json() const;
};

/// Feeds every conclusive singular entry of an arity-2 report to gamma_membership.
ContainmentResult musc_containment(const SpectrumReport& report, const SpacetimeModel& model,
                                   ConeVariant variant, const MembershipOptions& opts = {},
                                   Execution mode = Execution::parallel);

}  // namespace microspec

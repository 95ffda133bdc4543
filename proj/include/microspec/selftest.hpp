#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace microspec {

struct SelftestCheck {
    std::string module;
    std::string name;
    bool passed = false;
    std::string detail;
};

struct SelftestResult {
    std::vector<SelftestCheck> checks;
    bool passed() const;
    nlohmann::json to_json() const;
};

/// Closed-form sanity checks of every module (flat geodesics, delta and
/// Gaussian ladders, unit Weyl correlations, trivial cones and families).
/// Exceptions inside a check mark that check failed.
SelftestResult run_selftest();

}  // namespace microspec

#include "doctest.h"

#include <functional>
#include <string>

#include "microspec/config.hpp"
#include "microspec/errors.hpp"

using namespace microspec;

namespace {

std::string message_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("parse: sections, comments and the implicit run section") {
    const Config c = Config::parse("workers = 3\n# note\n[ladder]\nR0 = 8   # inline\n\n[spectral]\nprobes = -4,1; 2,0\n");
    CHECK(c.get_int("run.workers", 0) == 3);
    CHECK(c.get_double("ladder.R0", 0.0) == 8.0);
    const auto pts = c.get_points("spectral.probes", {});
    REQUIRE(pts.size() == 2);
    CHECK(pts[0] == Vec2(-4.0, 1.0));
    CHECK(pts[1] == Vec2(2.0, 0.0));
    CHECK(c.get_string("state.descriptor", "vacuum:m=1") == "vacuum:m=1");
}

TEST_CASE("parse errors carry the line number") {
    const std::string m = message_of([] { (void)Config::parse("[ladder]\nR0 8\n"); });
    CHECK(m.rfind("line 2:", 0) == 0);
    CHECK(message_of([] { (void)Config::parse("[bad\n"); }).rfind("line 1:", 0) == 0);
}

TEST_CASE("value errors point at the line that set the key") {
    const Config c = Config::parse("[scan]\ngrid = line\n[ladder]\nR0 = fast\n");
    const std::string m = message_of([&] { (void)resolve_run_config(c); });
    CHECK(m.rfind("line 4:", 0) == 0);
    CHECK(m.find("ladder.R0") != std::string::npos);
}

TEST_CASE("unknown keys are rejected") {
    const Config c = Config::parse("[ladder]\nR00 = 8\n");
    const std::string m = message_of([&] { (void)resolve_run_config(c); });
    CHECK(m.find("ladder.R00") != std::string::npos);
    CHECK(m.find("unknown key") != std::string::npos);
}

TEST_CASE("overrides replace file values and name the flag on error") {
    Config c = Config::parse("[acs]\nmu = 0.5\n");
    c.apply_override("acs.mu=0.25");
    CHECK(resolve_run_config(c).mu == 0.25);
    c.apply_override("acs.mu=2");
    CHECK(message_of([&] { (void)resolve_run_config(c); }).rfind("--set acs.mu:", 0) == 0);
    CHECK_THROWS_AS(c.apply_override("mu=1"), ConfigError);
    CHECK_THROWS_AS(c.apply_override("acs.mu"), ConfigError);
}

TEST_CASE("worker precedence") {
    const Config c = Config::parse("[run]\nworkers = 2\n");
    CHECK(resolve_run_config(c).workers == 2);
    CHECK(resolve_run_config(c, std::string("5")).workers == 5);
    Config flagged = c;
    flagged.set("run.workers", "7");
    CHECK(resolve_run_config(flagged, std::string("5"), true).workers == 7);
    CHECK_THROWS_AS(resolve_run_config(c, std::string("0")), ConfigError);
    CHECK_THROWS_AS(resolve_run_config(c, std::string("two")), ConfigError);
}

TEST_CASE("range and enum validation") {
    auto bad = [](const std::string& text) {
        return !message_of([&] { (void)resolve_run_config(Config::parse(text)); }).empty();
    };
    CHECK(bad("[thresholds]\nang_tol = 0\n"));
    CHECK(bad("[acs]\norder = 3\n"));
    CHECK(bad("[scan]\ngrid = file\n"));
    CHECK(bad("[kernel]\nname = sinc\n"));
    CHECK(bad("[state]\ndescriptor = thermal:m=1\n"));
    CHECK(bad("[ladder]\norder_singular_max = 9\norder_min = 8\n"));
    CHECK_FALSE(bad("[state]\ndescriptor = kms:m=1,beta=2\n"));
}

TEST_CASE("resolved config lists every section") {
    const json j = resolve_run_config(Config{}).to_json();
    for (const char* s : {"model", "state", "kernel", "scan", "ladder", "thresholds", "acs", "gacs", "spectral",
                          "musc", "output", "run"})
        CHECK_MESSAGE(j.contains(s), s);
}

TEST_CASE("scan tasks round-trip through JSON") {
    const std::vector<ScanTask> t = {ScanTask{{CovectorPoint{Vec2(0.1, -0.2), Vec2(1.0, 1.0)},
                                               CovectorPoint{Vec2(0.3, 0.0), Vec2(-1.0, 1.0)}}}};
    const std::vector<ScanTask> back = tasks_from_json(tasks_to_json(t, 2), 2);
    REQUIRE(back.size() == 1);
    REQUIRE(back[0].points.size() == 2);
    CHECK(back[0].points[1].base == t[0].points[1].base);
    CHECK(back[0].points[1].xi == t[0].points[1].xi);
    CHECK_THROWS_AS(tasks_from_json(json::parse(R"([{"points": [[0, 0]]}])"), 2), ConfigError);
}

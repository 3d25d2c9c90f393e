#include <doctest.h>

#include <filesystem>

#include "caplan/scenario.hpp"

using namespace caplan;

namespace {

const char* kMinimalScenario = R"json({
  "name": "minimal",
  "surfaces": [
    {"id": "ground", "vertices": [[-1,-1,0],[3,-1,0],[3,1,0],[-1,1,0]],
     "friction": 0.5, "kind": "ground", "foot_allowed": true}
  ],
  "initial_stance": [
    {"ee": "left_foot", "position": [0, 0.1, 0], "rpy": [0,0,0], "surface": "ground"},
    {"ee": "right_foot", "position": [0,-0.1, 0], "rpy": [0,0,0], "surface": "ground"}
  ],
  "initial_centroidal": {"r": [0,0,0.85], "l": [0,0,0], "k": [0,0,0]},
  "goal": {"center": [2.5, 0], "radius": 0.3},
  "default_disturbances": [{"delta": [0, 0.6, 0], "p_base": 0.005}],
  "normalized": true,
  "params": {"w_s": 3, "w_cap": 1000, "gamma": 0.1, "approach": "baseline",
             "time_limit_s": 60, "seed": 7}
})json";

}  // namespace

TEST_CASE("minimal scenario loads and validates") {
  const Scenario s = scenario_from_json_text(kMinimalScenario);
  CHECK(s.surfaces.size() == 1);
  CHECK(s.initial_stance.contacts.size() == 2);
  CHECK(s.goal.center.x() == doctest::Approx(2.5));
  CHECK(s.params.w_cap == 1000.0);
  CHECK(s.params.seed == 7);
  // normalized impulses are scaled by the robot mass
  CHECK(s.disturbance_field.default_disturbances[0].delta.y() ==
        doctest::Approx(0.6 * s.robot.mass));
}

TEST_CASE("save/load round-trip preserves every field") {
  const Scenario s = scenario_from_json_text(kMinimalScenario);
  const auto tmp = std::filesystem::temp_directory_path() / "caplan_roundtrip.json";
  save_scenario(s, tmp);
  const Scenario t = load_scenario(tmp);
  CHECK(t.surfaces.size() == s.surfaces.size());
  CHECK((t.initial_centroidal.r - s.initial_centroidal.r).norm() == 0.0);
  CHECK(t.goal.radius == s.goal.radius);
  CHECK(t.params.w_s == s.params.w_s);
  CHECK(t.params.approach == s.params.approach);
  CHECK(t.disturbance_field.default_disturbances.size() == 1);
  CHECK(t.disturbance_field.default_disturbances[0].delta.y() ==
        doctest::Approx(s.disturbance_field.default_disturbances[0].delta.y()));
  CHECK(t.robot.mass == s.robot.mass);
  std::filesystem::remove(tmp);
}

TEST_CASE("parse errors name the offending field") {
  std::string text = kMinimalScenario;
  const auto pos = text.find("\"radius\"");
  text.erase(pos, text.find('}', pos) - pos);
  text.insert(pos, "\"r\": 1");
  try {
    scenario_from_json_text(text);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("radius") != std::string::npos);
  }
}

TEST_CASE("goal over a hole fails validation") {
  std::string text = kMinimalScenario;
  const auto pos = text.find("[2.5, 0]");
  text.replace(pos, 8, "[9.0, 0]");
  CHECK_THROWS_AS(scenario_from_json_text(text), ValidationError);
}

TEST_CASE("stance off the surface fails validation") {
  std::string text = kMinimalScenario;
  const auto pos = text.find("[0, 0.1, 0]");
  text.replace(pos, 11, "[0, 0.1, 1]");
  CHECK_THROWS_AS(scenario_from_json_text(text), ValidationError);
}

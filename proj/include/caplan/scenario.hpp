#pragma once

#include <filesystem>
#include <string>

#include "caplan/contacts.hpp"
#include "caplan/disturbance.hpp"

namespace caplan {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CentroidalState {
  Vec3 r{Vec3::Zero()};  // CoM position, m
  Vec3 l{Vec3::Zero()};  // linear momentum, kg m/s
  Vec3 k{Vec3::Zero()};  // angular momentum, kg m^2/s
};

enum class Approach { baseline = 0, swing_discretization = 1, worst_case = 2 };
std::string to_string(Approach a);
Approach approach_from_string(const std::string& s);

struct PlannerParams {
  double w_s{3.0};
  double w_cap{1000.0};
  double gamma{0.1};
  Approach approach{Approach::baseline};
  double time_limit_s{60.0};
  uint64_t seed{0};
};

/// Robot constants shared by the oracle, sampler and planner.
struct RobotParams {
  double mass{60.0};
  double gravity{9.81};
  double foot_half_length{0.11};  // support rectangle 0.22 x 0.11 m
  double foot_half_width{0.055};
  double f_max_factor{2.0};  // f_max = factor * m * g per contact
  double tau_max_foot{20.0};
  double tau_max_palm{5.0};
  // CoM reachability box in the foot frame
  double com_box_xy{0.35};
  double com_box_z_min{0.65};
  double com_box_z_max{1.0};
  double palm_reach_box{1.0};

  double f_max() const { return f_max_factor * mass * gravity; }
};

struct GoalRegion {
  Vec2 center{Vec2::Zero()};
  double radius{0.3};

  bool contains_xy(const Vec2& p) const { return (p - center).norm() <= radius; }
};

struct Scenario {
  std::string name;
  std::vector<Surface> surfaces;
  Stance initial_stance;
  CentroidalState initial_centroidal;
  GoalRegion goal;
  DisturbanceField disturbance_field;
  PlannerParams params;
  RobotParams robot;

  const Surface* find_surface(const std::string& id) const;

  /// All type invariants plus cross-checks (goal overlaps walkable
  /// ground). Throws ValidationError.
  void validate() const;
};

Scenario load_scenario(const std::filesystem::path& path);
void save_scenario(const Scenario& s, const std::filesystem::path& path);

Scenario scenario_from_json_text(const std::string& text);
std::string scenario_to_json_text(const Scenario& s);

}  // namespace caplan

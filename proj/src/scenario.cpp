#include "caplan/scenario.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace caplan {

using nlohmann::json;

std::string to_string(Approach a) {
  switch (a) {
    case Approach::baseline: return "baseline";
    case Approach::swing_discretization: return "swing_discretization";
    case Approach::worst_case: return "worst_case";
  }
  return "baseline";
}

Approach approach_from_string(const std::string& s) {
  if (s == "baseline") return Approach::baseline;
  if (s == "swing_discretization" || s == "swing-disc" || s == "swing_disc")
    return Approach::swing_discretization;
  if (s == "worst_case" || s == "worst-case") return Approach::worst_case;
  throw ParseError("unknown approach: " + s);
}

const Surface* Scenario::find_surface(const std::string& id) const {
  for (const Surface& s : surfaces)
    if (s.id == id) return &s;
  return nullptr;
}

void Scenario::validate() const {
  for (const Surface& s : surfaces) s.validate();
  initial_stance.validate(surfaces);
  disturbance_field.validate();
  if (!initial_centroidal.r.allFinite() || !initial_centroidal.l.allFinite() ||
      !initial_centroidal.k.allFinite())
    throw ValidationError("initial centroidal state is not finite");
  if (goal.radius <= 0.0) throw ValidationError("goal radius must be positive");

  bool goal_on_ground = false;
  for (const Surface& s : surfaces) {
    if (!s.foot_allowed) continue;
    // XY overlap of the goal disc with the surface polygon
    Vec3 c3(goal.center.x(), goal.center.y(), 0.0);
    Surface flat = s;
    for (Vec3& v : flat.polygon) v.z() = 0.0;
    flat.normal = Vec3::UnitZ();
    if (std::abs(s.normal.z()) < 1e-6) continue;  // vertical surface, no XY area
    if (flat.projected_boundary_distance(c3) <= goal.radius) {
      goal_on_ground = true;
      break;
    }
  }
  if (!goal_on_ground)
    throw ValidationError("goal disc does not overlap any foot-allowed surface");
}

namespace {

const json& at(const json& j, const char* field, const std::string& ctx) {
  auto it = j.find(field);
  if (it == j.end()) throw ParseError("missing field '" + ctx + field + "'");
  return *it;
}

Vec3 vec3_of(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.size() != 3) throw ParseError("field '" + ctx + "' is not a 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

Vec2 vec2_of(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.size() != 2) throw ParseError("field '" + ctx + "' is not a 2-vector");
  return Vec2(j[0].get<double>(), j[1].get<double>());
}

std::vector<Disturbance> disturbances_of(const json& arr, const std::string& ctx, double mass,
                                         bool normalized) {
  std::vector<Disturbance> out;
  for (size_t i = 0; i < arr.size(); ++i) {
    const std::string c = ctx + "[" + std::to_string(i) + "].";
    Disturbance d;
    d.delta = vec3_of(at(arr[i], "delta", c), c + "delta");
    if (normalized) d.delta *= mass;
    d.p_base = at(arr[i], "p_base", c).get<double>();
    out.push_back(d);
  }
  return out;
}

json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

Scenario scenario_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("scenario is not valid JSON: ") + e.what());
  }

  Scenario s;
  s.name = j.value("name", "");

  if (j.contains("robot")) {
    const json& r = j["robot"];
    s.robot.mass = r.value("mass", s.robot.mass);
    s.robot.gravity = r.value("gravity", s.robot.gravity);
    s.robot.foot_half_length = r.value("foot_half_length", s.robot.foot_half_length);
    s.robot.foot_half_width = r.value("foot_half_width", s.robot.foot_half_width);
    s.robot.f_max_factor = r.value("f_max_factor", s.robot.f_max_factor);
    s.robot.tau_max_foot = r.value("tau_max_foot", s.robot.tau_max_foot);
    s.robot.tau_max_palm = r.value("tau_max_palm", s.robot.tau_max_palm);
    s.robot.com_box_xy = r.value("com_box_xy", s.robot.com_box_xy);
    s.robot.com_box_z_min = r.value("com_box_z_min", s.robot.com_box_z_min);
    s.robot.com_box_z_max = r.value("com_box_z_max", s.robot.com_box_z_max);
  }

  for (const json& sj : at(j, "surfaces", "")) {
    const std::string ctx = "surfaces[" + std::to_string(s.surfaces.size()) + "].";
    Surface surf;
    surf.id = at(sj, "id", ctx).get<std::string>();
    for (const json& vj : at(sj, "vertices", ctx))
      surf.polygon.push_back(vec3_of(vj, ctx + "vertices"));
    if (surf.polygon.size() < 3) throw ParseError("field '" + ctx + "vertices' needs >= 3 points");
    // normal from the winding; file may override
    Vec3 n = Vec3::Zero();
    for (size_t i = 1; i + 1 < surf.polygon.size(); ++i)
      n += (surf.polygon[i] - surf.polygon[0]).cross(surf.polygon[i + 1] - surf.polygon[0]);
    if (n.norm() < 1e-12) throw ParseError("field '" + ctx + "vertices' is degenerate");
    surf.normal = sj.contains("normal") ? vec3_of(sj["normal"], ctx + "normal").normalized()
                                        : Vec3(n.normalized());
    surf.friction = sj.value("friction", 0.5);
    surf.kind = surface_kind_from_string(
        at(sj, "kind", ctx).get<std::string>());
    surf.palm_allowed = sj.value("palm_allowed", false);
    surf.foot_allowed = sj.value("foot_allowed", surf.kind == SurfaceKind::ground);
    s.surfaces.push_back(std::move(surf));
  }

  for (const json& cj : at(j, "initial_stance", "")) {
    const std::string ctx = "initial_stance[" + std::to_string(s.initial_stance.contacts.size()) + "].";
    ContactPose c;
    c.end_effector = end_effector_from_string(at(cj, "ee", ctx).get<std::string>());
    c.pose.position = vec3_of(at(cj, "position", ctx), ctx + "position");
    c.pose.rpy = vec3_of(at(cj, "rpy", ctx), ctx + "rpy");
    c.surface = at(cj, "surface", ctx).get<std::string>();
    s.initial_stance.contacts.push_back(std::move(c));
  }

  const json& ic = at(j, "initial_centroidal", "");
  s.initial_centroidal.r = vec3_of(at(ic, "r", "initial_centroidal."), "initial_centroidal.r");
  s.initial_centroidal.l = vec3_of(at(ic, "l", "initial_centroidal."), "initial_centroidal.l");
  s.initial_centroidal.k = vec3_of(at(ic, "k", "initial_centroidal."), "initial_centroidal.k");

  const json& gj = at(j, "goal", "");
  s.goal.center = vec2_of(at(gj, "center", "goal."), "goal.center");
  s.goal.radius = at(gj, "radius", "goal.").get<double>();

  const bool normalized = j.value("normalized", false);
  if (j.contains("disturbance_regions")) {
    const json& regions = j["disturbance_regions"];
    for (size_t i = 0; i < regions.size(); ++i) {
      const std::string ctx = "disturbance_regions[" + std::to_string(i) + "].";
      DisturbanceRegion r;
      const json& box = at(regions[i], "box", ctx);
      r.box_min = vec3_of(at(box, "min", ctx + "box."), ctx + "box.min");
      r.box_max = vec3_of(at(box, "max", ctx + "box."), ctx + "box.max");
      r.disturbances = disturbances_of(at(regions[i], "disturbances", ctx),
                                       ctx + "disturbances", s.robot.mass, normalized);
      s.disturbance_field.regions.push_back(std::move(r));
    }
  }
  if (j.contains("default_disturbances")) {
    s.disturbance_field.default_disturbances = disturbances_of(
        j["default_disturbances"], "default_disturbances", s.robot.mass, normalized);
  }

  if (j.contains("params")) {
    const json& p = j["params"];
    s.params.w_s = p.value("w_s", s.params.w_s);
    s.params.w_cap = p.value("w_cap", s.params.w_cap);
    s.params.gamma = p.value("gamma", s.params.gamma);
    if (p.contains("approach"))
      s.params.approach = approach_from_string(p["approach"].get<std::string>());
    s.params.time_limit_s = p.value("time_limit_s", s.params.time_limit_s);
    s.params.seed = p.value("seed", s.params.seed);
  }

  s.validate();
  return s;
}

std::string scenario_to_json_text(const Scenario& s) {
  json j;
  if (!s.name.empty()) j["name"] = s.name;

  j["surfaces"] = json::array();
  for (const Surface& surf : s.surfaces) {
    json sj;
    sj["id"] = surf.id;
    sj["vertices"] = json::array();
    for (const Vec3& v : surf.polygon) sj["vertices"].push_back(to_json(v));
    sj["normal"] = to_json(surf.normal);
    sj["friction"] = surf.friction;
    sj["kind"] = to_string(surf.kind);
    sj["palm_allowed"] = surf.palm_allowed;
    sj["foot_allowed"] = surf.foot_allowed;
    j["surfaces"].push_back(sj);
  }

  j["initial_stance"] = json::array();
  for (const ContactPose& c : s.initial_stance.contacts) {
    json cj;
    cj["ee"] = to_string(c.end_effector);
    cj["position"] = to_json(c.pose.position);
    cj["rpy"] = to_json(c.pose.rpy);
    cj["surface"] = c.surface;
    j["initial_stance"].push_back(cj);
  }

  j["initial_centroidal"] = {{"r", to_json(s.initial_centroidal.r)},
                             {"l", to_json(s.initial_centroidal.l)},
                             {"k", to_json(s.initial_centroidal.k)}};
  j["goal"] = {{"center", json::array({s.goal.center.x(), s.goal.center.y()})},
               {"radius", s.goal.radius}};

  j["disturbance_regions"] = json::array();
  for (const DisturbanceRegion& r : s.disturbance_field.regions) {
    json rj;
    rj["box"] = {{"min", to_json(r.box_min)}, {"max", to_json(r.box_max)}};
    rj["disturbances"] = json::array();
    for (const Disturbance& d : r.disturbances)
      rj["disturbances"].push_back({{"delta", to_json(d.delta)}, {"p_base", d.p_base}});
    j["disturbance_regions"].push_back(rj);
  }
  j["default_disturbances"] = json::array();
  for (const Disturbance& d : s.disturbance_field.default_disturbances)
    j["default_disturbances"].push_back({{"delta", to_json(d.delta)}, {"p_base", d.p_base}});

  j["params"] = {{"w_s", s.params.w_s},
                 {"w_cap", s.params.w_cap},
                 {"gamma", s.params.gamma},
                 {"approach", to_string(s.params.approach)},
                 {"time_limit_s", s.params.time_limit_s},
                 {"seed", s.params.seed}};

  json rj;
  rj["mass"] = s.robot.mass;
  rj["gravity"] = s.robot.gravity;
  rj["foot_half_length"] = s.robot.foot_half_length;
  rj["foot_half_width"] = s.robot.foot_half_width;
  rj["f_max_factor"] = s.robot.f_max_factor;
  rj["tau_max_foot"] = s.robot.tau_max_foot;
  rj["tau_max_palm"] = s.robot.tau_max_palm;
  rj["com_box_xy"] = s.robot.com_box_xy;
  rj["com_box_z_min"] = s.robot.com_box_z_min;
  rj["com_box_z_max"] = s.robot.com_box_z_max;
  j["robot"] = rj;

  return j.dump(2);
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return scenario_from_json_text(ss.str());
}

void save_scenario(const Scenario& s, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write scenario file: " + path.string());
  out << scenario_to_json_text(s) << "\n";
}

}  // namespace caplan

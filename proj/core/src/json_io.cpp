#include "gaitopt/json_io.hpp"

#include <fstream>

#include "json.hpp"

namespace gaitopt {

using nlohmann::json;

namespace {

json vec2_to_json(const Vec2& v) { return json::array({v.x(), v.y()}); }

Vec2 vec2_from_json(const json& j, const char* field) {
  if (!j.is_array() || j.size() != 2)
    throw std::invalid_argument(std::string(field) + ": expected [x, y]");
  return Vec2(j[0].get<double>(), j[1].get<double>());
}

json foot_to_json(const std::optional<FootPose>& fp) {
  if (!fp) return nullptr;
  return json{{"pos", vec2_to_json(fp->position)}, {"angle", fp->angle}};
}

std::optional<FootPose> foot_from_json(const json& j, const char* field) {
  if (j.is_null()) return std::nullopt;
  if (!j.contains("pos") || !j.contains("angle"))
    throw std::invalid_argument(std::string(field) + ": expected {pos, angle}");
  FootPose fp;
  fp.position = vec2_from_json(j.at("pos"), field);
  fp.angle = j.at("angle").get<double>();
  return fp;
}

}  // namespace

std::string problem_to_json(const ProblemInstance& inst) {
  json terrain;
  terrain["ground"] = json::array();
  for (const auto& p : inst.terrain.ground) terrain["ground"].push_back(vec2_to_json(p));
  terrain["obstacles"] = json::array();
  for (const auto& poly : inst.terrain.obstacles) {
    json jp = json::array();
    for (const auto& v : poly.v) jp.push_back(vec2_to_json(v));
    terrain["obstacles"].push_back(jp);
  }
  json stances = json::array();
  for (const auto& s : inst.stances)
    stances.push_back(json{{"left", foot_to_json(s.left)},
                           {"right", foot_to_json(s.right)}});
  json j{{"id", inst.id},
         {"task", to_string(inst.task)},
         {"terrain", terrain},
         {"stances", stances},
         {"features",
          {{"step_length", inst.features.step_length},
           {"step_width", inst.features.step_width},
           {"step_height", inst.features.step_height},
           {"trunk_collision_distance", inst.features.trunk_collision_distance}}}};
  return j.dump(2);
}

ProblemInstance problem_from_json(const std::string& text) {
  json j = json::parse(text);
  ProblemInstance inst;
  for (const char* field : {"id", "task", "terrain", "stances", "features"})
    if (!j.contains(field))
      throw std::invalid_argument(std::string("problem: missing field '") + field + "'");
  inst.id = j.at("id").get<std::string>();
  inst.task = parse_task(j.at("task").get<std::string>());
  const json& jt = j.at("terrain");
  if (!jt.contains("ground"))
    throw std::invalid_argument("problem: terrain.ground missing");
  for (const auto& p : jt.at("ground"))
    inst.terrain.ground.push_back(vec2_from_json(p, "terrain.ground"));
  if (jt.contains("obstacles")) {
    for (const auto& jp : jt.at("obstacles")) {
      ConvexPolygon poly;
      for (const auto& v : jp) poly.v.push_back(vec2_from_json(v, "terrain.obstacles"));
      inst.terrain.obstacles.push_back(std::move(poly));
    }
  }
  inst.terrain.validate();
  for (const auto& js : j.at("stances")) {
    Stance s;
    s.left = foot_from_json(js.value("left", json(nullptr)), "stances.left");
    s.right = foot_from_json(js.value("right", json(nullptr)), "stances.right");
    if (s.contact_count() == 0)
      throw std::invalid_argument("problem: stance with no contact feet");
    inst.stances.push_back(std::move(s));
  }
  if (inst.stances.empty())
    throw std::invalid_argument("problem: stances must be nonempty");
  if (inst.task == Task::Posture && inst.stances.size() != 1)
    throw std::invalid_argument("problem: posture instances carry one stance");
  const json& jf = j.at("features");
  inst.features.step_length = jf.value("step_length", 0.0);
  inst.features.step_width = jf.value("step_width", 0.0);
  inst.features.step_height = jf.value("step_height", 0.0);
  inst.features.trunk_collision_distance =
      jf.value("trunk_collision_distance", 0.0);
  return inst;
}

std::string solution_to_json(const SolutionFile& sol) {
  json waypoints = json::array();
  for (const auto& w : sol.waypoints) {
    json jw = json::array();
    for (int i = 0; i < w.size(); ++i) jw.push_back(w[i]);
    waypoints.push_back(jw);
  }
  json j{{"instance_id", sol.instance_id},
         {"waypoints", waypoints},
         {"solver",
          {{"name", sol.solver.name},
           {"seed", sol.solver.seed},
           {"restarts", sol.solver.restarts},
           {"time_s", sol.solver.time_s}}}};
  return j.dump(2);
}

SolutionFile solution_from_json(const std::string& text) {
  json j = json::parse(text);
  SolutionFile sol;
  for (const char* field : {"instance_id", "waypoints"})
    if (!j.contains(field))
      throw std::invalid_argument(std::string("solution: missing field '") + field + "'");
  sol.instance_id = j.at("instance_id").get<std::string>();
  for (const auto& jw : j.at("waypoints")) {
    if (!jw.is_array())
      throw std::invalid_argument("solution: waypoints must be arrays");
    Vector w(static_cast<int>(jw.size()));
    for (int i = 0; i < w.size(); ++i) w[i] = jw[static_cast<size_t>(i)].get<double>();
    sol.waypoints.push_back(std::move(w));
  }
  if (j.contains("solver")) {
    const json& js = j.at("solver");
    sol.solver.name = js.value("name", std::string());
    sol.solver.seed = js.value("seed", std::uint64_t{0});
    sol.solver.restarts = js.value("restarts", 0);
    sol.solver.time_s = js.value("time_s", 0.0);
  }
  return sol;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_suite(const std::filesystem::path& dir, const GeneratedSuite& suite,
                 std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  std::filesystem::create_directories(dir / "probes");
  json manifest;
  manifest["seed"] = seed;
  manifest["posture"] = json::array();
  manifest["trajectory"] = json::array();
  for (size_t i = 0; i < suite.instances.size(); ++i) {
    const auto& inst = suite.instances[i];
    std::string fname = inst.id + ".json";
    write_text_file(dir / fname, problem_to_json(inst));
    manifest[inst.task == Task::Posture ? "posture" : "trajectory"].push_back(fname);
    // posture probes are complete example solutions; trajectory probes
    // are per-stance reference configurations, not full trajectories
    if (i < suite.probes.size() && inst.task == Task::Posture)
      write_text_file(dir / "probes" / (inst.id + ".solution.json"),
                      solution_to_json(suite.probes[i]));
  }
  if (!suite.warnings.empty()) manifest["warnings"] = suite.warnings;
  write_text_file(dir / "manifest.json", manifest.dump(2));
}

LoadedSuite load_suite(const std::filesystem::path& dir) {
  LoadedSuite out;
  json manifest = json::parse(read_text_file(dir / "manifest.json"));
  for (const char* key : {"posture", "trajectory"}) {
    if (!manifest.contains(key)) continue;
    for (const auto& f : manifest.at(key))
      out.instances.push_back(
          problem_from_json(read_text_file(dir / f.get<std::string>())));
  }
  return out;
}

}  // namespace gaitopt

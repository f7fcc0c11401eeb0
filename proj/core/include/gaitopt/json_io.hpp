#pragma once

#include <filesystem>
#include <string>

#include "gaitopt/bench.hpp"

namespace gaitopt {

// Problem/solution JSON schemas:
//   problem:  {id, task, terrain:{ground:[[x,y],...],
//             obstacles:[[[x,y],...],...]},
//             stances:[{left:{pos:[x,y],angle}|null, right:{...}|null}],
//             features:{step_length, step_width, step_height,
//                       trunk_collision_distance}}
//   solution: {instance_id, waypoints:[[9 reals],...],
//             solver:{name, seed, restarts, time_s}}
// Malformed files raise std::invalid_argument naming the offending field
// (parse errors keep nlohmann's byte/line diagnostics).

std::string problem_to_json(const ProblemInstance& instance);
ProblemInstance problem_from_json(const std::string& text);

std::string solution_to_json(const SolutionFile& solution);
SolutionFile solution_from_json(const std::string& text);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

/// Write the suite: one problem JSON per instance plus manifest.json
/// ({seed, posture:[...], trajectory:[...]}) and, when given, probe
/// solutions under <dir>/probes/.
void write_suite(const std::filesystem::path& dir, const GeneratedSuite& suite,
                 std::uint64_t seed);

struct LoadedSuite {
  std::vector<ProblemInstance> instances;
};
LoadedSuite load_suite(const std::filesystem::path& dir);

}  // namespace gaitopt

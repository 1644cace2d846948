#pragma once

// CSV dumps of paths and fields, boundary-condition files and point specs.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>

#include <json.hpp>

#include "polybm/harmonic.hpp"
#include "polybm/mesh.hpp"
#include "polybm/process.hpp"

namespace polybm {

/// Shortest decimal text that reads back to the same double.
std::string format_double(double x);

/// "# config: {...}" and "# seed: N" lines.
void write_header(std::ostream& out, const nlohmann::json& config, std::uint64_t seed);

/// Columns path_id, time, simplex_id, bary_1..bary_{n+1}, discarded.
void write_paths_csv(std::ostream& out, const Polyhedron& P, std::span<const PathSample> paths,
                     const nlohmann::json& config, std::uint64_t seed);

/// Columns node_id, simplex_id, bary_1..bary_{n+1}, value (value_1.. for maps).
void write_field_csv(std::ostream& out, const DiscreteField& f, const nlohmann::json& config, std::uint64_t seed);

/// Point from "vertex-id" or "edge:a-b:s" (fraction s from a towards b).
Point parse_point(const Polyhedron& P, const std::string& spec);

/// JSON object mapping point specs to value lists; each point must be a mesh node.
BoundaryCondition parse_boundary_condition(const Mesh& mesh, const nlohmann::json& doc);
BoundaryCondition load_boundary_condition(const Mesh& mesh, const std::filesystem::path& path);

}  // namespace polybm

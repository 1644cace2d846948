#include "polybm/io.hpp"

#include <charconv>
#include <fstream>
#include <ostream>

#include "polybm/errors.hpp"

namespace polybm {

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void write_header(std::ostream& out, const nlohmann::json& config, std::uint64_t seed) {
  out << "# config: " << config.dump() << '\n';
  out << "# seed: " << seed << '\n';
}

void write_paths_csv(std::ostream& out, const Polyhedron& P, std::span<const PathSample> paths,
                     const nlohmann::json& config, std::uint64_t seed) {
  const int n = P.dimension();
  write_header(out, config, seed);
  out << "path_id,time,simplex_id";
  for (int i = 1; i <= n + 1; ++i) out << ",bary_" << i;
  out << ",discarded\n";
  for (std::size_t id = 0; id < paths.size(); ++id) {
    const PathSample& path = paths[id];
    for (std::size_t j = 0; j < path.points.size(); ++j) {
      out << id << ',' << format_double(path.times[j]) << ',' << path.points[j].simplex;
      for (int i = 0; i <= n; ++i) out << ',' << format_double(path.points[j].bary[i]);
      out << ',' << (path.discarded ? 1 : 0) << '\n';
    }
  }
}

void write_field_csv(std::ostream& out, const DiscreteField& f, const nlohmann::json& config, std::uint64_t seed) {
  const Mesh& mesh = f.mesh();
  const int n = mesh.dimension();
  write_header(out, config, seed);
  out << "node_id,simplex_id";
  for (int i = 1; i <= n + 1; ++i) out << ",bary_" << i;
  if (f.components() == 1) {
    out << ",value";
  } else {
    for (int c = 1; c <= f.components(); ++c) out << ",value_" << c;
  }
  out << '\n';
  for (std::size_t id = 0; id < mesh.node_count(); ++id) {
    const MeshNode& nd = mesh.node(static_cast<int>(id));
    out << id << ',' << nd.location.simplex;
    for (int i = 0; i <= n; ++i) out << ',' << format_double(nd.location.bary[i]);
    for (int c = 0; c < f.components(); ++c) out << ',' << format_double(f(static_cast<int>(id), c));
    out << '\n';
  }
}

Point parse_point(const Polyhedron& P, const std::string& spec) {
  if (spec.rfind("edge:", 0) != 0) {
    auto v = P.find_vertex(spec);
    if (!v) throw ComplexError("unknown vertex '" + spec + "'");
    return vertex_point(P, *v);
  }
  const auto colon = spec.find(':', 5);
  const auto dash = spec.find('-', 5);
  if (colon == std::string::npos || dash == std::string::npos || dash > colon)
    throw ComplexError("malformed point '" + spec + "', expected edge:a-b:s");
  const std::string a = spec.substr(5, dash - 5), b = spec.substr(dash + 1, colon - dash - 1);
  double s = 0.0;
  const std::string tail = spec.substr(colon + 1);
  const auto res = std::from_chars(tail.data(), tail.data() + tail.size(), s);
  if (res.ec != std::errc() || res.ptr != tail.data() + tail.size() || s < 0.0 || s > 1.0)
    throw ComplexError("edge parameter must be a number in [0, 1] in '" + spec + "'");
  const auto va = P.find_vertex(a), vb = P.find_vertex(b);
  if (!va || !vb) throw ComplexError("unknown vertex in '" + spec + "'");
  if (s == 0.0) return vertex_point(P, *va);
  if (s == 1.0) return vertex_point(P, *vb);
  for (SimplexId id : P.vertex_star(*va)) {
    const auto& verts = P.maximal(id).vertices;
    Point p{id, {}};
    bool has_b = false;
    for (std::size_t i = 0; i < verts.size(); ++i) {
      if (verts[i] == *va) p.bary[i] = 1.0 - s;
      if (verts[i] == *vb) {
        p.bary[i] = s;
        has_b = true;
      }
    }
    if (has_b) return p;
  }
  throw ComplexError("no edge " + a + "-" + b);
}

BoundaryCondition parse_boundary_condition(const Mesh& mesh, const nlohmann::json& doc) {
  if (!doc.is_object()) throw ComplexError("boundary condition file must be a JSON object");
  BoundaryCondition bc;
  for (const auto& [key, value] : doc.items()) {
    const Point p = parse_point(mesh.polyhedron(), key);
    const auto node = mesh.node_at(p);
    if (!node) throw ComplexError("boundary point '" + key + "' is not a mesh node");
    std::vector<double> v;
    if (value.is_number()) {
      v.push_back(value.get<double>());
    } else if (value.is_array()) {
      for (const auto& x : value) {
        if (!x.is_number()) throw ComplexError("boundary values must be numbers");
        v.push_back(x.get<double>());
      }
    } else {
      throw ComplexError("boundary value for '" + key + "' must be a number or a list");
    }
    bc.values[*node] = std::move(v);
  }
  return bc;
}

BoundaryCondition load_boundary_condition(const Mesh& mesh, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ComplexError("cannot open " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ComplexError("malformed boundary condition file: " + std::string(e.what()));
  }
  return parse_boundary_condition(mesh, doc);
}

}  // namespace polybm

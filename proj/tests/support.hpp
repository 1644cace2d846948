#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "polybm/complex.hpp"

namespace polybm::testing {

inline std::filesystem::path data_dir() { return POLYBM_DATA_DIR; }
inline std::filesystem::path test_data_dir() { return POLYBM_TEST_DATA_DIR; }

inline Polyhedron bundled(const std::string& name) {
  return load_polyhedron(data_dir() / "complexes" / (name + ".json"));
}

// Global (x, y) on the bundled unit square a=(0,0), b=(1,0), c=(1,1), d=(0,1).
inline Vec2 square_xy(const Polyhedron& P, const Point& p) {
  static const std::map<std::string, Vec2> where{{"a", {0, 0}}, {"b", {1, 0}}, {"c", {1, 1}}, {"d", {0, 1}}};
  Vec2 x{0, 0};
  for (int i = 0; i < 3; ++i) {
    const Vec2 v = where.at(P.vertex_name(P.maximal(p.simplex).vertices[i]));
    x[0] += p.bary[i] * v[0];
    x[1] += p.bary[i] * v[1];
  }
  return x;
}

// Chart coordinate along a one-dimensional simplex, measured from its first vertex.
inline double edge_x(const Polyhedron& P, const Point& p) { return P.chart(p.simplex).to_chart(p.bary)[0]; }

}  // namespace polybm::testing

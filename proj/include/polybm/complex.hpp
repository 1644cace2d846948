#pragma once

// Admissible piecewise-flat polyhedra of dimension 1 or 2.
//
// A polyhedron is a finite simplicial complex whose maximal simplices each
// carry a flat metric given by their edge lengths. Points are stored as
// (maximal simplex, barycentric coordinates); a coordinate that is exactly
// zero places the point on the corresponding face.

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace polybm {

using VertexIndex = int;
using SimplexId = int;  // index of a maximal (n-)simplex
using FaceId = int;     // index of an (n-1)-simplex

using Vec2 = std::array<double, 2>;
using Bary = std::array<double, 3>;

struct Simplex {
  int dim = 0;
  std::vector<VertexIndex> vertices;  // sorted ascending
  int id = 0;
};

/// Flat chart of one maximal simplex. Only the first `dim` components of a
/// Vec2 and the first `dim + 1` barycentric coordinates are meaningful.
struct Chart {
  int dim = 0;
  std::array<Vec2, 3> position{};  // vertex positions, in simplex tuple order
  std::array<Vec2, 3> gradient{};  // constant gradients of the barycentric coordinates
  double volume = 0.0;

  Vec2 to_chart(const Bary& b) const;
  Bary to_bary(const Vec2& x) const;
};

/// Chart realising the given edge lengths. For triangles the longest edge is
/// placed on the x-axis; `lengths` is (l01, l02, l12), only l01 is read for
/// segments.
Chart make_chart(int dim, const std::array<double, 3>& lengths);

struct Point {
  SimplexId simplex = 0;
  Bary bary{};
};

/// Parsed complex description file.
struct ComplexDescription {
  int dimension = 0;
  std::vector<std::string> vertices;
  std::vector<std::vector<std::string>> simplices;  // maximal simplices only
  std::map<std::string, double> edge_lengths;       // "a-b" with a < b
};

ComplexDescription parse_complex_description(const nlohmann::json& doc);
ComplexDescription load_complex_description(const std::filesystem::path& path);

class Polyhedron {
 public:
  int dimension() const { return dim_; }

  std::size_t vertex_count() const { return vertex_names_.size(); }
  const std::string& vertex_name(VertexIndex v) const { return vertex_names_.at(v); }
  std::optional<VertexIndex> find_vertex(const std::string& name) const;

  /// All s-simplices, 0 <= s <= n.
  std::span<const Simplex> simplices(int s) const { return by_dim_.at(s); }
  std::size_t maximal_count() const { return by_dim_[dim_].size(); }
  const Simplex& maximal(SimplexId s) const { return by_dim_[dim_].at(s); }
  const Simplex& face(FaceId f) const { return by_dim_[dim_ - 1].at(f); }
  std::size_t face_count() const { return by_dim_[dim_ - 1].size(); }

  /// Maximal simplices adjacent to a face, ordered by simplex id.
  std::span<const SimplexId> adjacent(FaceId f) const { return adjacency_.at(f); }
  int branch_count(FaceId f) const { return static_cast<int>(adjacency_.at(f).size()); }

  /// Face of maximal simplex `s` opposite its local vertex `local`.
  FaceId opposite_face(SimplexId s, int local) const { return opposite_.at(s)[local]; }
  /// Position of `s` in the adjacency list of face `f`, or -1.
  int branch_index(FaceId f, SimplexId s) const;

  /// Maximal simplices containing vertex v.
  std::span<const SimplexId> vertex_star(VertexIndex v) const { return vertex_star_.at(v); }

  const Chart& chart(SimplexId s) const { return charts_.at(s); }
  double edge_length(VertexIndex a, VertexIndex b) const;

  /// Id of the simplex with exactly these vertices, if present.
  std::optional<int> find_simplex(std::vector<VertexIndex> vertices) const;

  /// True when vertex v lies on a boundary face (a face with one branch).
  bool vertex_on_boundary(VertexIndex v) const { return vertex_on_boundary_.at(v); }

  /// "a-b-c" style label for diagnostics.
  std::string label(const Simplex& s) const;

 private:
  friend Polyhedron build_complex(const ComplexDescription& spec);

  int dim_ = 0;
  std::vector<std::string> vertex_names_;
  std::map<std::string, VertexIndex> vertex_lookup_;
  std::vector<std::vector<Simplex>> by_dim_;
  std::map<std::vector<VertexIndex>, int> simplex_lookup_;
  std::vector<std::vector<SimplexId>> adjacency_;
  std::vector<std::array<FaceId, 3>> opposite_;
  std::vector<std::vector<SimplexId>> vertex_star_;
  std::vector<bool> vertex_on_boundary_;
  std::map<std::pair<VertexIndex, VertexIndex>, double> lengths_;
  std::vector<Chart> charts_;
};

/// Builds the fully indexed polyhedron; lower faces are synthesised.
/// Throws ComplexError on duplicate simplices, missing or non-positive edge
/// lengths, inconsistent lengths and degenerate triangles.
Polyhedron build_complex(const ComplexDescription& spec);
Polyhedron load_polyhedron(const std::filesystem::path& path);

struct AdmissibilityReport {
  bool homogeneous = true;
  bool chainable = true;
  std::vector<std::string> non_homogeneous;  // simplices not inside a maximal one
  std::vector<std::string> chain_breaks;     // components / stars broken by the skeleton

  bool admissible() const { return homogeneous && chainable; }
  std::string to_text() const;
};

/// Checks dimensional homogeneity and (n-1)-chainability on the whole complex
/// and on every vertex star. Failures are reported, never thrown.
AdmissibilityReport validate_admissible(const Polyhedron& P);

// ---------------------------------------------------------------------------
// Point classification

enum class Stratum {
  interior,  // open maximal simplex
  face,      // open (n-1)-simplex
  skeleton,  // (n-2)-skeleton
};

struct Location {
  Stratum stratum = Stratum::interior;
  SimplexId simplex = 0;
  FaceId face = -1;        // set for Stratum::face
  VertexIndex vertex = -1;  // set for Stratum::skeleton
};

/// Classification by the zero pattern of the barycentric coordinates.
Location locate(const Polyhedron& P, const Point& p);

Point vertex_point(const Polyhedron& P, VertexIndex v);
/// Point of face f with the given barycentric weights over the face vertices.
Point face_point(const Polyhedron& P, FaceId f, std::span<const double> weights);
/// Re-expresses p in the chart of maximal simplex `target`, if p lies in its closure.
std::optional<Point> express_in(const Polyhedron& P, const Point& p, SimplexId target);
/// Global vertex -> barycentric weight of a point (only nonzero entries).
std::vector<std::pair<VertexIndex, double>> support(const Polyhedron& P, const Point& p);

// ---------------------------------------------------------------------------
// Links

struct LinkBranch {
  SimplexId simplex = 0;
  Point base;          // the base point expressed in this simplex
  Vec2 tangent{};      // unit tangent of the face (n = 2, face points)
  Vec2 normal{};       // inward unit normal into the simplex
  bool full = false;   // whole unit sphere (manifold point inside a simplex)
  double mass = 0.0;   // sampling mass, 1/k
};

struct Link {
  Point base;
  Stratum stratum = Stratum::interior;
  FaceId face = -1;
  std::vector<LinkBranch> branches;

  int k() const { return static_cast<int>(branches.size()); }
};

/// Throws GeometryError at (n-2)-skeleton points.
Link link_at(const Polyhedron& P, const Point& p);

}  // namespace polybm

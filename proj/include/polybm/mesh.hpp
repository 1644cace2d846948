#pragma once

// Conforming refinement of a polyhedron and nodal (P1) fields on it.

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "polybm/complex.hpp"

namespace polybm {

enum class NodeClass {
  interior,       // open maximal simplex
  singular_face,  // open (n-1)-face with k >= 2 branches
  boundary,       // open (n-1)-face with one branch
  codim2,         // vertex of a 2-dimensional complex
};

struct MeshNode {
  Point location;
  NodeClass kind = NodeClass::interior;
  FaceId face = -1;         // for singular_face and boundary nodes
  VertexIndex vertex = -1;  // for vertex nodes
  bool on_boundary = false; // lies on the boundary of the polyhedron
  std::vector<int> elements;
};

struct MeshElement {
  SimplexId host = 0;
  std::array<int, 3> nodes{-1, -1, -1};
  std::array<Vec2, 3> coords{};     // node positions in the host chart
  std::array<Vec2, 3> gradients{};  // gradients of the hat functions
  double volume = 0.0;
};

class Mesh {
 public:
  const Polyhedron& polyhedron() const { return *P_; }
  int dimension() const { return P_->dimension(); }
  std::span<const MeshNode> nodes() const { return nodes_; }
  std::span<const MeshElement> elements() const { return elements_; }
  const MeshNode& node(int i) const { return nodes_.at(i); }
  const MeshElement& element(int e) const { return elements_.at(e); }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t element_count() const { return elements_.size(); }

  /// Longest element edge.
  double h() const { return h_; }
  int subdivisions(SimplexId s) const { return subdivisions_.at(s); }

  /// Element containing p with p's barycentric weights in that element.
  std::pair<int, Bary> locate(const Point& p) const;
  /// Node sitting exactly at p, if any.
  std::optional<int> node_at(const Point& p) const;
  /// Node at the vertex.
  int vertex_node(VertexIndex v) const;
  /// Position of node i in the chart of maximal simplex s (s must contain it).
  std::optional<Vec2> position_in(int node, SimplexId s) const;

 private:
  friend Mesh build_mesh(const Polyhedron& P, double h);

  const Polyhedron* P_ = nullptr;
  double h_ = 0.0;
  std::vector<MeshNode> nodes_;
  std::vector<MeshElement> elements_;
  std::vector<int> subdivisions_;
  std::vector<std::vector<int>> grid_nodes_;     // per simplex, grid index -> node
  std::vector<std::vector<int>> grid_elements_;  // per simplex, cell index -> element
  std::vector<int> vertex_nodes_;
};

/// Uniform refinement: each edge of a 1-complex is split into ceil(L / h)
/// segments; 2-complexes use one common subdivision count ceil(min L / h) so
/// shared faces conform (longer edges get proportionally longer elements). Throws OperatorError when h exceeds the shortest edge.
/// The polyhedron must outlive the mesh.
Mesh build_mesh(const Polyhedron& P, double h);

/// Real or R^m valued nodal field with piecewise-linear interpolation.
class DiscreteField {
 public:
  DiscreteField() = default;
  DiscreteField(const Mesh& mesh, int components = 1);
  DiscreteField(const Mesh& mesh, std::vector<double> values, int components = 1);

  /// Nodal samples of fn. The field remembers fn and evaluate() returns it
  /// exactly off the nodes; nodal operators only ever see the samples.
  static DiscreteField from_function(const Mesh& mesh, std::function<double(const Point&)> fn);

  const Mesh& mesh() const { return *mesh_; }
  int components() const { return components_; }
  std::size_t size() const { return values_.size() / components_; }

  double operator()(int node, int component = 0) const { return values_[node * components_ + component]; }
  /// Writable access; editing the samples forgets the generating function.
  double& operator()(int node, int component = 0) {
    exact_ = nullptr;
    return values_[node * components_ + component];
  }
  std::span<const double> values() const { return values_; }

  /// Value at p: the generating function when known, else P1 interpolation.
  double evaluate(const Point& p, int component = 0) const;
  double interpolate(const Point& p, int component = 0) const;
  bool has_exact() const { return static_cast<bool>(exact_); }
  /// Drops the generating function, leaving a purely nodal field.
  DiscreteField nodal() const;
  DiscreteField component(int c) const;
  DiscreteField scaled(double c) const;

 private:
  const Mesh* mesh_ = nullptr;
  int components_ = 1;
  std::vector<double> values_;
  std::function<double(const Point&)> exact_;
};

}  // namespace polybm

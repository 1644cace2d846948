#pragma once

// Straight-line motion in flat charts with face crossing, the exponential map
// at face points, boundary normal coordinates and broken-geodesic length.

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "polybm/complex.hpp"
#include "polybm/random.hpp"

namespace polybm {

/// Barycentric tolerance for detecting (n-2)-skeleton hits.
inline constexpr double kSkeletonTolerance = 1e-12;

/// Continuation rule at faces with exactly two branches. Faces with k >= 3
/// always branch uniformly; boundary faces (k = 1) reflect.
enum class CrossingRule { unfold, uniform };

struct FlowState {
  Point position;
  Vec2 direction{};  // unit vector in the chart of position.simplex
  double elapsed = 0.0;
};

struct BranchChoice {
  FaceId face = -1;
  int incoming = -1;  // branch index of the simplex the flow arrived from
  int chosen = -1;    // branch index of the continuation simplex
};

struct StepOptions {
  CrossingRule rule = CrossingRule::unfold;
  /// Non-uniform branch weights, for power checks of the branching tests.
  /// Empty means uniform. Applied at faces whose branch count matches.
  std::vector<double> branch_weights;
  /// Return true to halt the flow when it reaches face `f` from simplex `from`.
  std::function<bool(FaceId f, SimplexId from)> stop_at;
  /// Receives every random branch choice.
  std::vector<BranchChoice>* choices = nullptr;
};

struct StepResult {
  FlowState state;
  bool stopped = false;     // halted by StepOptions::stop_at
  double travelled = 0.0;   // length actually covered
  FaceId stop_face = -1;
};

/// Moves `s` a length L along the generalised geodesic flow. Throws
/// CodimensionTwoHit when the trajectory meets the (n-2)-skeleton.
StepResult geodesic_step(const Polyhedron& P, const FlowState& s, double L, Rng& rng,
                         const StepOptions& opt = {});

/// Uniform direction from the link at s.position: a uniform branch, then a
/// uniform unit vector on that branch's half-sphere (or full sphere).
FlowState sample_link_direction(const Polyhedron& P, const Point& p, Rng& rng);

/// Tangent vector at a point of an open face: tangential part along the face
/// (n = 2 only), normal length into the branch simplex.
struct FaceTangent {
  double tangential = 0.0;
  double normal = 0.0;  // >= 0
  int branch = 0;       // index into adjacent(face)
};

/// E_p(u) = exp along the face, then |w| orthogonally into branch `u.branch`.
/// Throws GeometryError("exponential out of range") when the image leaves the
/// branch simplex.
Point exponential_map(const Polyhedron& P, const Point& p, const FaceTangent& u);

struct NormalCoordinates {
  double tangential = 0.0;  // distance along the face from its lowest-index vertex (n = 2)
  double normal = 0.0;      // distance to the face
  int branch = 0;           // index into adjacent(face)
};

NormalCoordinates normal_coordinates(const Polyhedron& P, FaceId face, const Point& x);

/// Sum of chart distances between consecutive points; consecutive points must
/// share a maximal simplex.
double broken_geodesic_length(const Polyhedron& P, std::span<const Point> points);

/// Chart distance between two points lying in the closure of one simplex.
std::optional<double> chart_distance(const Polyhedron& P, const Point& a, const Point& b);

/// Distance from p to the nearest vertex of its host simplex (the
/// (n-2)-skeleton in dimension 2).
double distance_to_skeleton(const Polyhedron& P, const Point& p);

/// Planar development of the flat sheet adjacent to a face: the branch simplex
/// and every simplex reachable from it through two-branch faces. Coordinates
/// are (tangential along the face, signed distance from the face line).
class SheetFrame {
 public:
  SheetFrame(const Polyhedron& P, FaceId face, int branch);

  bool contains(SimplexId s) const { return placements_.count(s) > 0; }
  /// Sheet coordinates of p, or nullopt when p's simplex is outside the sheet.
  std::optional<Vec2> coordinates(const Point& p) const;
  /// Inverse of coordinates() within the sheet.
  std::optional<Point> point_at(const Vec2& xy) const;
  std::vector<SimplexId> simplices() const;

 private:
  struct Placement {
    double a00, a01, a10, a11;  // chart -> sheet linear part
    Vec2 offset;
  };
  const Polyhedron* P_;
  std::map<SimplexId, Placement> placements_;
};

/// Page decomposition around a face: one sheet per branch.
class PageCoordinates {
 public:
  PageCoordinates(const Polyhedron& P, FaceId face);

  struct Coords {
    int page = 0;
    double tangential = 0.0;
    double normal = 0.0;  // distance from the face, >= 0
  };

  FaceId face() const { return face_; }
  int pages() const { return static_cast<int>(frames_.size()); }
  /// Throws GeometryError for points outside every sheet.
  Coords operator()(const Point& p) const;
  /// Point with the given sheet coordinates on a page.
  std::optional<Point> point(int page, double tangential, double normal) const;

 private:
  FaceId face_;
  std::vector<SheetFrame> frames_;
};

/// Face with the largest branch count (lowest id on ties).
FaceId most_branched_face(const Polyhedron& P);

}  // namespace polybm

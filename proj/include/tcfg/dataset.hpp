#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "tcfg/matrix.hpp"

namespace tcfg::dataset {

struct TwoMoonsSpec {
  std::size_t n_samples = 2000;
  double noise_std = 0.05;
  std::uint64_t seed = 0;
};

struct LabeledPoint {
  Vector position;
  int label = 0;  // 0 = outer arc, 1 = inner arc
};

enum class Arc { kOuter = 0, kInner = 1 };

// Outer arc: (cos t, sin t); inner arc: (1 - cos t, 0.5 - sin t); t in [0, pi].
Vector moon_point(Arc arc, double t);

// ceil(n/2) outer points (label 0) followed by floor(n/2) inner points
// (label 1), angles uniform on [0, pi], isotropic Gaussian noise.
std::vector<LabeledPoint> two_moons(const TwoMoonsSpec& spec);

struct ManifoldProjection {
  Vector foot_point;
  double distance = 0.0;
  Vector tangent;  // unit, direction of increasing arc parameter
  Vector normal;   // unit, perpendicular to tangent, oriented from query to foot
  Arc arc = Arc::kOuter;
  bool at_endpoint = false;
};

struct MoonsProjection {
  ManifoldProjection nearest;
  ManifoldProjection per_arc[2];
};

// Nearest point on the union of the two arcs (endpoints included). Throws
// kAmbiguousProjection when p sits exactly at either circle center.
MoonsProjection project_to_moons(std::span<const double> p);

// Column-orthonormal D x 2 map; distances are preserved, no translation.
class IsometricEmbedding {
 public:
  IsometricEmbedding(std::size_t ambient_dim, std::uint64_t seed);

  std::size_t ambient_dim() const noexcept { return basis_.rows(); }
  const Matrix& basis() const noexcept { return basis_; }

  Vector embed(std::span<const double> p) const;
  // Orthogonal projection back to plane coordinates.
  Vector to_plane(std::span<const double> x) const;

 private:
  Matrix basis_;
};

std::vector<Vector> embed_isometric(std::span<const Vector> points, std::size_t ambient_dim,
                                    std::uint64_t seed);

// Header `x0,...,x{D-1},label`, one row per point.
void write_csv(std::ostream& out, std::span<const LabeledPoint> points);

}  // namespace tcfg::dataset

#include "tcfg/dataset.hpp"

#include <cmath>
#include <numbers>

#include "tcfg/error.hpp"
#include "tcfg/io.hpp"
#include "tcfg/rng.hpp"

namespace tcfg::dataset {
namespace {

constexpr double kPi = std::numbers::pi;

struct ArcGeometry {
  double cx, cy;
  double lo, hi;  // polar angle range about the center
};

// The inner arc (1 - cos t, 0.5 - sin t) is the unit circle about (1, 0.5)
// at polar angle pi + t.
constexpr ArcGeometry kArcs[2] = {{0.0, 0.0, 0.0, kPi}, {1.0, 0.5, kPi, 2.0 * kPi}};

Vector circle_point(const ArcGeometry& g, double phi) {
  return {g.cx + std::cos(phi), g.cy + std::sin(phi)};
}

ManifoldProjection project_to_arc(std::span<const double> p, Arc arc) {
  const ArcGeometry& g = kArcs[static_cast<int>(arc)];
  const double dx = p[0] - g.cx;
  const double dy = p[1] - g.cy;
  if (dx == 0.0 && dy == 0.0) {
    throw Error(ErrorKind::kAmbiguousProjection, "project_to_moons: point at circle center");
  }
  double phi = std::atan2(dy, dx);
  if (arc == Arc::kInner && phi < 0.0) phi += 2.0 * kPi;
  // atan2 returns (-pi, pi]; for the inner arc the right endpoint sits at
  // angle 0 == 2 pi.
  if (arc == Arc::kInner && phi == 0.0) phi = 2.0 * kPi;

  ManifoldProjection out;
  out.arc = arc;
  if (phi < g.lo || phi > g.hi) {
    const Vector a = circle_point(g, g.lo);
    const Vector b = circle_point(g, g.hi);
    const double da = std::hypot(p[0] - a[0], p[1] - a[1]);
    const double db = std::hypot(p[0] - b[0], p[1] - b[1]);
    phi = da <= db ? g.lo : g.hi;
    out.at_endpoint = true;
  } else if (phi == g.lo || phi == g.hi) {
    out.at_endpoint = true;
  }
  out.foot_point = circle_point(g, phi);
  out.distance = std::hypot(out.foot_point[0] - p[0], out.foot_point[1] - p[1]);

  // Both arcs run counter-clockwise about their centers as t increases.
  out.tangent = {-std::sin(phi), std::cos(phi)};
  out.normal = {std::cos(phi), std::sin(phi)};
  if (out.distance > 0.0) {
    const double toward = (out.foot_point[0] - p[0]) * out.normal[0] +
                          (out.foot_point[1] - p[1]) * out.normal[1];
    if (toward < 0.0) out.normal = {-out.normal[0], -out.normal[1]};
  }
  return out;
}

}  // namespace

Vector moon_point(Arc arc, double t) {
  if (arc == Arc::kOuter) return {std::cos(t), std::sin(t)};
  return {1.0 - std::cos(t), 0.5 - std::sin(t)};
}

std::vector<LabeledPoint> two_moons(const TwoMoonsSpec& spec) {
  if (spec.n_samples < 2) throw Error(ErrorKind::kInvalidSpec, "two_moons: need n_samples >= 2");
  if (!std::isfinite(spec.noise_std) || spec.noise_std < 0.0) {
    throw Error(ErrorKind::kInvalidSpec, "two_moons: noise_std must be finite and >= 0");
  }
  Rng rng(spec.seed);
  std::uniform_real_distribution<double> angle(0.0, kPi);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const std::size_t n_outer = (spec.n_samples + 1) / 2;
  std::vector<LabeledPoint> points;
  points.reserve(spec.n_samples);
  for (std::size_t i = 0; i < spec.n_samples; ++i) {
    const Arc arc = i < n_outer ? Arc::kOuter : Arc::kInner;
    LabeledPoint lp{moon_point(arc, angle(rng)), static_cast<int>(arc)};
    if (spec.noise_std > 0.0) {
      for (double& x : lp.position) x += spec.noise_std * gauss(rng);
    }
    points.push_back(std::move(lp));
  }
  return points;
}

MoonsProjection project_to_moons(std::span<const double> p) {
  if (p.size() != 2) throw Error(ErrorKind::kDimensionMismatch, "project_to_moons: need a 2-D point");
  if (!all_finite(p)) throw Error(ErrorKind::kInvalidInput, "project_to_moons: non-finite point");
  MoonsProjection out;
  out.per_arc[0] = project_to_arc(p, Arc::kOuter);
  out.per_arc[1] = project_to_arc(p, Arc::kInner);
  out.nearest = out.per_arc[1].distance < out.per_arc[0].distance ? out.per_arc[1] : out.per_arc[0];
  return out;
}

IsometricEmbedding::IsometricEmbedding(std::size_t ambient_dim, std::uint64_t seed)
    : basis_(ambient_dim, 2) {
  if (ambient_dim < 2) throw Error(ErrorKind::kInvalidInput, "embedding: ambient_dim must be >= 2");
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  // Gram-Schmidt on two Gaussian columns, repeated until well conditioned.
  for (;;) {
    Vector c0(ambient_dim), c1(ambient_dim);
    for (auto& x : c0) x = gauss(rng);
    for (auto& x : c1) x = gauss(rng);
    const double n0 = norm(c0);
    if (n0 < 1e-3) continue;
    for (auto& x : c0) x /= n0;
    for (int pass = 0; pass < 2; ++pass) {
      const double proj = dot(c0, c1);
      for (std::size_t i = 0; i < ambient_dim; ++i) c1[i] -= proj * c0[i];
    }
    const double n1 = norm(c1);
    if (n1 < 1e-3) continue;
    for (auto& x : c1) x /= n1;
    for (std::size_t i = 0; i < ambient_dim; ++i) {
      basis_(i, 0) = c0[i];
      basis_(i, 1) = c1[i];
    }
    break;
  }
}

Vector IsometricEmbedding::embed(std::span<const double> p) const {
  if (p.size() != 2) throw Error(ErrorKind::kDimensionMismatch, "embed: need a 2-D point");
  Vector out(ambient_dim());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = basis_(i, 0) * p[0] + basis_(i, 1) * p[1];
  return out;
}

Vector IsometricEmbedding::to_plane(std::span<const double> x) const {
  if (x.size() != ambient_dim()) throw Error(ErrorKind::kDimensionMismatch, "to_plane: wrong dimension");
  Vector out(2, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[0] += basis_(i, 0) * x[i];
    out[1] += basis_(i, 1) * x[i];
  }
  return out;
}

std::vector<Vector> embed_isometric(std::span<const Vector> points, std::size_t ambient_dim,
                                    std::uint64_t seed) {
  const IsometricEmbedding map(ambient_dim, seed);
  std::vector<Vector> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(map.embed(p));
  return out;
}

void write_csv(std::ostream& out, std::span<const LabeledPoint> points) {
  const std::size_t dim = points.empty() ? 2 : points.front().position.size();
  for (std::size_t i = 0; i < dim; ++i) out << 'x' << i << ',';
  out << "label\n";
  for (const auto& p : points) {
    for (double x : p.position) out << io::format_double(x) << ',';
    out << p.label << '\n';
  }
}

}  // namespace tcfg::dataset

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mudinet/rng.hpp"

namespace mudinet {

inline constexpr double kSpeedOfLight = 3.0e8;  // m/s

struct Point2D {
  double x = 0.0;
  double y = 0.0;

  Point2D operator+(Point2D o) const { return {x + o.x, y + o.y}; }
  Point2D operator-(Point2D o) const { return {x - o.x, y - o.y}; }
  Point2D operator*(double k) const { return {x * k, y * k}; }
};

inline double dot(Point2D a, Point2D b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2D a, Point2D b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2D a) { return std::hypot(a.x, a.y); }
inline double distance(Point2D a, Point2D b) { return norm(a - b); }

// Smooth ideal reflective surface, a 2D segment from a to b.
struct WallSegment {
  Point2D a;
  Point2D b;

  double length() const { return distance(a, b); }
};

inline void validate_wall(const WallSegment& w) {
  if (!(w.length() > 0.0)) {
    throw std::invalid_argument("WallSegment: endpoints coincide (zero length)");
  }
}

// Locally Gaussian scatterer cloud truncated to the ellipse with half-axes
// truncation*sigma_x, truncation*sigma_y around the center.
struct ScattererRegion {
  Point2D center;
  double sigma_x = 1.0;
  double sigma_y = 1.0;
  double truncation = 3.0;

  bool contains(Point2D p) const {
    const double u = (p.x - center.x) / (truncation * sigma_x);
    const double v = (p.y - center.y) / (truncation * sigma_y);
    return u * u + v * v <= 1.0;
  }
};

inline void validate_region(const ScattererRegion& r) {
  if (!(r.sigma_x > 0.0) || !(r.sigma_y > 0.0)) {
    throw std::invalid_argument("ScattererRegion: sigma_x and sigma_y must be > 0");
  }
  if (!(r.truncation >= 1.0)) {
    throw std::invalid_argument("ScattererRegion: truncation must be >= 1");
  }
}

// One Monte-Carlo mass point of a region's scatterer density.
struct ScattererPoint {
  Point2D pos;
  double weight = 0.0;
};

// A specular propagation path: direct (order 0) or up to two wall bounces.
struct SpecularPath {
  int order = 0;
  std::vector<Point2D> reflection_points;  // size == order
  std::vector<double> segment_lengths;     // size == order + 1
  double total_length = 0.0;
};

struct AxisAlignedBox {
  Point2D lo;
  Point2D hi;

  bool contains(Point2D p) const {
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y;
  }
};

struct Scene {
  std::vector<WallSegment> walls;
  Point2D tx;
  std::vector<ScattererRegion> regions;
  AxisAlignedBox bounds{{0.0, 0.0}, {1.0, 1.0}};
};

inline void validate_scene(const Scene& scene) {
  if (!(scene.bounds.hi.x > scene.bounds.lo.x) || !(scene.bounds.hi.y > scene.bounds.lo.y)) {
    throw std::invalid_argument("Scene: bounds must have positive extent");
  }
  if (!scene.bounds.contains(scene.tx)) {
    throw std::invalid_argument("Scene: tx outside bounds");
  }
  for (const auto& w : scene.walls) {
    validate_wall(w);
    if (!scene.bounds.contains(w.a) || !scene.bounds.contains(w.b)) {
      throw std::invalid_argument("Scene: wall outside bounds");
    }
  }
  for (const auto& r : scene.regions) validate_region(r);
}

// Reflection of p across the infinite line through the wall. Involution:
// mirroring twice returns p.
inline Point2D mirror_point(Point2D p, const WallSegment& wall) {
  validate_wall(wall);
  const Point2D d = wall.b - wall.a;
  const double t = dot(p - wall.a, d) / dot(d, d);
  const Point2D foot = wall.a + d * t;
  return foot + (foot - p);
}

namespace detail {

// Intersection of segments (a0,a1) and (b0,b1). Returns parameters (t,u) with
// the crossing at a0 + t*(a1-a0) = b0 + u*(b1-b0), or nullopt when parallel.
inline std::optional<std::pair<double, double>> segment_intersection(
    Point2D a0, Point2D a1, Point2D b0, Point2D b1) {
  const Point2D r = a1 - a0;
  const Point2D s = b1 - b0;
  const double denom = cross(r, s);
  const double scale = norm(r) * norm(s);
  if (std::abs(denom) <= 1e-14 * scale) return std::nullopt;  // parallel/collinear
  const Point2D q = b0 - a0;
  const double t = cross(q, s) / denom;
  const double u = cross(q, r) / denom;
  return std::make_pair(t, u);
}

// True when some wall properly crosses the open segment (a,b). Crossings at
// the segment's own endpoints (reflection points, tx, ue) do not block, nor
// do grazes at a wall endpoint within tolerance.
inline bool segment_blocked(Point2D a, Point2D b, std::span<const WallSegment> walls,
                            double endpoint_tol_m = 1e-9) {
  const double seg_len = distance(a, b);
  if (seg_len <= 0.0) return false;
  for (const auto& w : walls) {
    const auto hit = segment_intersection(a, b, w.a, w.b);
    if (!hit) continue;
    const double t_tol = endpoint_tol_m / seg_len;
    const double u_tol = endpoint_tol_m / w.length();
    if (hit->first > t_tol && hit->first < 1.0 - t_tol &&
        hit->second > u_tol && hit->second < 1.0 - u_tol) {
      return true;
    }
  }
  return false;
}

}  // namespace detail

struct PathOptions {
  bool check_occlusion = true;
  double endpoint_tol_m = 1e-9;  // reflection points must be this far from wall ends
};

// Image-method specular paths from scene.tx to ue, direct plus every valid
// reflection path up to max_order, sorted by total length ascending.
inline std::vector<SpecularPath> specular_paths(const Scene& scene, Point2D ue,
                                                int max_order,
                                                const PathOptions& opts = {}) {
  if (max_order < 0 || max_order > 2) {
    throw std::invalid_argument("specular_paths: max_order must be in {0, 1, 2}");
  }
  if (!scene.bounds.contains(ue)) {
    throw std::invalid_argument("specular_paths: ue outside scene bounds");
  }
  const Point2D tx = scene.tx;
  if (distance(tx, ue) <= opts.endpoint_tol_m) {
    throw std::invalid_argument("specular_paths: ue coincident with tx (degenerate geometry)");
  }
  const std::span<const WallSegment> walls(scene.walls);

  std::vector<SpecularPath> paths;

  auto try_add = [&](int order, std::vector<Point2D> rps) {
    std::vector<Point2D> nodes;
    nodes.push_back(tx);
    for (auto p : rps) nodes.push_back(p);
    nodes.push_back(ue);
    SpecularPath path;
    path.order = order;
    path.reflection_points = std::move(rps);
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
      const double len = distance(nodes[i], nodes[i + 1]);
      if (len <= opts.endpoint_tol_m) return;  // degenerate segment
      path.segment_lengths.push_back(len);
      path.total_length += len;
    }
    if (opts.check_occlusion) {
      for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
        if (detail::segment_blocked(nodes[i], nodes[i + 1], walls, opts.endpoint_tol_m)) return;
      }
    }
    paths.push_back(std::move(path));
  };

  // Reflection point of the unfolded segment (image -> target) on the wall,
  // strictly inside the segment with the configured endpoint tolerance.
  auto reflection_on = [&](Point2D image, Point2D target,
                           const WallSegment& w) -> std::optional<Point2D> {
    const auto hit = detail::segment_intersection(image, target, w.a, w.b);
    if (!hit) return std::nullopt;
    const double u_tol = opts.endpoint_tol_m / w.length();
    if (hit->first <= 0.0 || hit->first >= 1.0) return std::nullopt;
    if (hit->second <= u_tol || hit->second >= 1.0 - u_tol) return std::nullopt;
    return w.a + (w.b - w.a) * hit->second;
  };

  try_add(0, {});

  if (max_order >= 1) {
    for (const auto& w : scene.walls) {
      const Point2D img = mirror_point(tx, w);
      if (const auto rp = reflection_on(img, ue, w)) try_add(1, {*rp});
    }
  }
  if (max_order >= 2) {
    for (std::size_t i = 0; i < scene.walls.size(); ++i) {
      for (std::size_t j = 0; j < scene.walls.size(); ++j) {
        if (i == j) continue;
        const auto& wi = scene.walls[i];
        const auto& wj = scene.walls[j];
        const Point2D img1 = mirror_point(tx, wi);
        const Point2D img2 = mirror_point(img1, wj);
        const auto rp2 = reflection_on(img2, ue, wj);
        if (!rp2) continue;
        const auto rp1 = reflection_on(img1, *rp2, wi);
        if (!rp1) continue;
        try_add(2, {*rp1, *rp2});
      }
    }
  }

  std::stable_sort(paths.begin(), paths.end(), [](const SpecularPath& a, const SpecularPath& b) {
    if (a.total_length != b.total_length) return a.total_length < b.total_length;
    return a.order < b.order;
  });
  return paths;
}

// n points from the truncated bivariate Gaussian over the region's ellipse D,
// each with Monte-Carlo weight 1/n. Deterministic for a fixed stream.
inline std::vector<ScattererPoint> sample_scatterers(const ScattererRegion& region,
                                                     std::size_t n, RandomStream& rng) {
  validate_region(region);
  if (n < 1) throw std::invalid_argument("sample_scatterers: n must be >= 1");
  std::vector<ScattererPoint> points;
  points.reserve(n);
  const double w = 1.0 / static_cast<double>(n);
  while (points.size() < n) {
    const Point2D p{rng.normal(region.center.x, region.sigma_x),
                    rng.normal(region.center.y, region.sigma_y)};
    if (region.contains(p)) points.push_back({p, w});
  }
  return points;
}

// Probability mass of the delay band {c*tau_lo <= r_d + r_t <= c*tau_hi}
// under the truncated scatterer density, estimated over the given samples
// (r_d: tx->scatterer, r_t: scatterer->ue).
inline double ellipse_arc_mass(Point2D tx, Point2D ue, double tau_lo, double tau_hi,
                               std::span<const ScattererPoint> samples,
                               double c = kSpeedOfLight) {
  if (!(tau_hi > tau_lo)) {
    throw std::invalid_argument("ellipse_arc_mass: tau_hi must exceed tau_lo");
  }
  const double direct = distance(tx, ue);
  if (c * tau_lo < direct - 1e-9) {
    throw std::invalid_argument("ellipse_arc_mass: tau_lo below direct-distance bound (empty ellipse)");
  }
  const double lo = c * tau_lo;
  const double hi = c * tau_hi;
  double mass = 0.0;
  for (const auto& s : samples) {
    const double len = distance(s.pos, tx) + distance(s.pos, ue);
    if (len >= lo && len <= hi) mass += s.weight;
  }
  return mass;
}

inline double ellipse_arc_mass(Point2D tx, Point2D ue, double tau_lo, double tau_hi,
                               const ScattererRegion& region, RandomStream& rng,
                               std::size_t n = 200000, double c = kSpeedOfLight) {
  const auto samples = sample_scatterers(region, n, rng);
  return ellipse_arc_mass(tx, ue, tau_lo, tau_hi, std::span<const ScattererPoint>(samples), c);
}

// Fraction of region mass swept by the union of per-position delay bands.
// Each position observes the grid-aligned band (width band_width_m, path
// length units) containing the tx -> region center -> position delay; the
// union over a trajectory realizes the arc-coverage statement made precise
// by the channel model's multi-time observation argument.
inline double trajectory_arc_coverage(Point2D tx, std::span<const Point2D> positions,
                                      const ScattererRegion& region, double band_width_m,
                                      std::span<const ScattererPoint> samples) {
  if (positions.empty()) {
    throw std::invalid_argument("trajectory_arc_coverage: need at least one position");
  }
  if (!(band_width_m > 0.0)) {
    throw std::invalid_argument("trajectory_arc_coverage: band_width must be > 0");
  }
  // Band center per position: nearest tap-grid multiple of the center delay.
  std::vector<double> band_centers;
  band_centers.reserve(positions.size());
  for (const auto& p : positions) {
    const double center_len = distance(region.center, tx) + distance(region.center, p);
    band_centers.push_back(std::round(center_len / band_width_m) * band_width_m);
  }
  const double half = band_width_m / 2.0;
  double covered = 0.0;
  for (const auto& s : samples) {
    const double rd = distance(s.pos, tx);
    for (std::size_t i = 0; i < positions.size(); ++i) {
      const double len = rd + distance(s.pos, positions[i]);
      if (std::abs(len - band_centers[i]) <= half) {
        covered += s.weight;
        break;
      }
    }
  }
  return covered;
}

inline double trajectory_arc_coverage(Point2D tx, std::span<const Point2D> positions,
                                      const ScattererRegion& region, double band_width_m,
                                      RandomStream& rng, std::size_t n = 200000) {
  const auto samples = sample_scatterers(region, n, rng);
  return trajectory_arc_coverage(tx, positions, region, band_width_m,
                                 std::span<const ScattererPoint>(samples));
}

}  // namespace mudinet

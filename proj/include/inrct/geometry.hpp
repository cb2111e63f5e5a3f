#pragma once

#include <cstddef>
#include <variant>
#include <vector>

#include "inrct/grid.hpp"

namespace inrct {

/// Circular fan-beam scan with a flat, centered detector.
///
/// The source sits at R(cos b, sin b) for view angle b; the detector plane is
/// perpendicular to the central ray at distance `source_to_detector` from the
/// source; detector cell k is centered at u = (k - (num_det-1)/2) * det_spacing
/// along (-sin b, cos b).
struct FanBeamGeometry {
  std::vector<double> angles;
  double source_to_iso = 0.0;
  double source_to_detector = 0.0;
  int num_det = 0;
  double det_spacing = 1.0;
};

/// Circular cone-beam scan; the source orbit lies in the z = 0 plane and
/// detector row j sits at v = (j - (num_det_rows-1)/2) * det_row_spacing.
struct ConeBeamGeometry {
  std::vector<double> angles;
  double source_to_iso = 0.0;
  double source_to_detector = 0.0;
  int num_det = 0;
  double det_spacing = 1.0;
  int num_det_rows = 0;
  double det_row_spacing = 1.0;
};

using Geometry = std::variant<FanBeamGeometry, ConeBeamGeometry>;

/// Views equally spaced over `arc` radians, first view at angle 0.
std::vector<double> equispaced_angles(int num_views, double arc);

/// Shared read-only view of either geometry kind.
struct ScanLayout {
  int ndim = 2;
  int num_views = 0;
  int num_rows = 1;
  int num_det = 0;
  double source_to_iso = 0.0;
  double source_to_detector = 0.0;
  double det_spacing = 1.0;
  double row_spacing = 1.0;
  std::vector<double> angles;

  std::size_t rays_per_view() const { return static_cast<std::size_t>(num_rows) * num_det; }
  std::size_t num_rays() const { return rays_per_view() * num_views; }
  double det_u(int k) const { return (k - 0.5 * (num_det - 1)) * det_spacing; }
  double det_v(int j) const { return (j - 0.5 * (num_rows - 1)) * row_spacing; }
};

/// Validates the geometry and returns its layout; throws std::invalid_argument.
ScanLayout scan_layout(const Geometry& geom);
std::size_t num_rays(const Geometry& geom);
bool same_geometry(const Geometry& a, const Geometry& b);

/// Rays of one view are contiguous; detector column is the fastest axis.
struct ImageVec {
  VoxelGrid grid;
  std::vector<double> values;
};

struct Sinogram {
  Geometry geometry;
  std::vector<double> values;
};

}  // namespace inrct

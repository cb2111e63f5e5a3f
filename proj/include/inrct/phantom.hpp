#pragma once

#include <array>
#include <string>
#include <vector>

#include "inrct/geometry.hpp"
#include "inrct/grid.hpp"

namespace inrct {

/// One additive ellipse (2D) or ellipsoid (3D). The rotation is about the z
/// axis; in 2D the z entries are ignored.
struct Ellipse {
  std::array<double, 3> center{0.0, 0.0, 0.0};
  std::array<double, 3> semi_axes{1.0, 1.0, 1.0};
  double angle = 0.0;
  double value = 0.0;
};

struct EllipsePhantom {
  int ndim = 2;
  std::vector<Ellipse> components;

  /// Sum of the values of every component containing the point.
  double value_at(double x, double y, double z = 0.0) const;
};

/// The 10-ellipse Shepp-Logan head phantom. Coordinates are scaled by
/// `scale_mm` (the outer ellipse spans 0.69 x 0.92 of it) and values by
/// 0.011 mm^-1 so the brightest region is 0.022 mm^-1.
EllipsePhantom shepp_logan_2d(double scale_mm = 1.0);

/// Nested-ellipsoid head-like volume phantom with the same value scaling.
EllipsePhantom ellipsoid_phantom_3d(double scale_mm = 1.0);

/// Parses the line format `cx cy [cz] ax ay [az] angle value`, '#' comments.
EllipsePhantom parse_phantom(const std::string& text);
EllipsePhantom load_phantom(const std::string& path);

/// Voxel value = mean of supersample^d evenly spaced point samples.
ImageVec rasterize(const EllipsePhantom& phantom, const VoxelGrid& grid, int supersample);

/// Averages blocks of `factor`^d fine voxels onto a coarse grid.
ImageVec downsample_average(const ImageVec& fine, int factor);

/// Forward-projects the phantom rasterized on `sim_grid` and adds i.i.d.
/// Gaussian noise. `sim_grid` must be at least twice as fine as `recon_grid`
/// along every axis so reconstruction never uses the simulation model.
Sinogram simulate_measurements(const EllipsePhantom& phantom, const Geometry& geometry,
                               const VoxelGrid& sim_grid, const VoxelGrid& recon_grid,
                               double noise_sigma, Rng& rng, int supersample = 1);

}  // namespace inrct

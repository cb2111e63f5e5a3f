#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "inrct/geometry.hpp"
#include "inrct/grid.hpp"
#include "inrct/inr.hpp"
#include "inrct/objective.hpp"
#include "inrct/phantom.hpp"

namespace inrct {

enum class Estimator { Stochastic, Exact };
struct ExperimentData;

std::string to_string(Estimator e);
Estimator parse_estimator(const std::string& name);

struct ReconConfig {
  // Grid and scan.
  int dim = 2;
  std::array<int, 3> grid{128, 128, 64};
  double spacing = 1.0;  // mm, isotropic
  bool inscribed_mask = true;
  int views = 60;
  double arc_deg = 360.0;
  int detectors = 192;
  double det_spacing = 1.5;
  int det_rows = 64;
  double det_row_spacing = 1.5;
  double source_to_iso = 250.0;
  double source_to_detector = 500.0;

  // Data: either a phantom to simulate, or a measured sinogram.
  std::string phantom = "shepp_logan";  // shepp_logan | ellipsoid | <phantom file>
  double phantom_scale = 0.0;           // mm; 0 = 90% of the FOV radius
  int sim_factor = 4;                   // simulation grid refinement per axis
  int sim_supersample = 1;
  double noise_sigma = 0.0;
  std::string measurements;  // raw sinogram path; overrides the phantom
  std::string ground_truth;  // raw image path, optional with measurements

  // Model and optimization.
  InrConfig model;
  LossKind::Tag loss = LossKind::Tag::FLS;
  Estimator estimator = Estimator::Stochastic;
  double batch_fraction = 1.0 / 16.0;
  int view_subsets = 1;  // > 1 cycles through interleaved view subsets
  int iterations = 2000;
  double value_scale = 0.0;  // mm^-1 per unit of network output; 0 = from the data
  double lr = 0.0;  // 0 = architecture default
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;

  // Output.
  std::string output_dir;
  int log_every = 10;
};

/// Throws std::invalid_argument on inconsistent settings.
void validate(const ReconConfig& cfg);
double effective_lr(const ReconConfig& cfg);

/// Typical attenuation implied by the data: the largest line integral over
/// the FOV diameter (1 when the sinogram is zero).
double data_value_scale(const Sinogram& measurements, const VoxelGrid& grid);
double effective_value_scale(const ReconConfig& cfg, const ExperimentData& data);

VoxelGrid make_grid(const ReconConfig& cfg);
VoxelGrid make_sim_grid(const ReconConfig& cfg);
Geometry make_geometry(const ReconConfig& cfg);
EllipsePhantom make_phantom(const ReconConfig& cfg);

struct ExperimentData {
  VoxelGrid grid;
  Geometry geometry;
  FovMask mask;
  Sinogram measurements;
  std::optional<ImageVec> truth;
};

/// Simulates (or loads) measurements and the reference image.
ExperimentData prepare_experiment(const ReconConfig& cfg);

/// Mean squared difference over inside-mask voxels.
double image_mse(const ImageVec& recon, const ImageVec& truth, const FovMask& mask);

struct MetricsRow {
  int iteration = 0;
  double loss = 0.0;
  double image_mse = 0.0;  // NaN without ground truth
  double wall_time_s = 0.0;
  double memory_ratio = 1.0;
};

struct MetricsLog {
  std::vector<MetricsRow> rows;
  std::string to_csv() const;
};

struct TrainResult {
  InrModel model;
  MetricsLog log;
  ImageVec image;           // E{f} on the grid, zero outside the mask
  double final_mse = 0.0;   // of `image`; NaN without ground truth
  std::size_t batch_size = 0;
  double value_scale = 1.0;
};

TrainResult train_inr(const ReconConfig& cfg);
TrainResult train_inr(const ReconConfig& cfg, const ExperimentData& data);

/// Human-readable dump of every setting, written next to run outputs.
std::string describe(const ReconConfig& cfg);

}  // namespace inrct

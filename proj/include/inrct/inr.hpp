#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "inrct/grid.hpp"

namespace inrct {

enum class Arch { FFN, SIREN, HashEnc };
enum class Activation { ReLU, Sine, Identity };

std::string to_string(Arch arch);
Arch parse_arch(const std::string& name);

/// Architecture hyperparameters. Fields that do not apply to the selected
/// architecture are ignored.
struct InrConfig {
  Arch arch = Arch::FFN;
  int hidden_width = 256;
  int hidden_layers = 3;
  // FFN
  int fourier_features = 256;
  double fourier_scale = 10.0;
  // SIREN
  double first_omega = 30.0;
  double hidden_omega = 30.0;
  // HashEnc
  int hash_levels = 8;
  int hash_log2_table = 14;
  int hash_features = 2;
  int hash_base_resolution = 16;
  int hash_max_resolution = 512;
};

/// Defaults per architecture (HashEnc uses a 2x64 head).
InrConfig default_config(Arch arch);

struct DenseLayer {
  int in = 0;
  int out = 0;
  std::size_t weight_offset = 0;  // row-major out x in
  std::size_t bias_offset = 0;
  Activation act = Activation::Identity;
  double omega = 1.0;  // sine frequency multiplier
};

/// Named slice of the flat parameter vector.
struct ParamBlock {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
};

/// Coordinate network f: [-1,1]^d -> R with all trainable parameters stored
/// in one flat vector. The layout is: hash tables (level, entry, feature),
/// then per dense layer its weights followed by its bias.
class InrModel {
 public:
  InrModel() = default;

  Arch arch() const { return config_.arch; }
  const InrConfig& config() const { return config_; }
  int input_dim() const { return input_dim_; }
  int encoded_dim() const { return encoded_dim_; }
  std::size_t num_params() const { return params_.size(); }

  std::span<const double> params() const { return params_; }
  std::span<double> params() { return params_; }

  const std::vector<ParamBlock>& layout() const { return layout_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  /// Frozen Fourier matrix (fourier_features x d, row-major); FFN only.
  const std::vector<double>& fourier_matrix() const { return fourier_; }
  /// Grid resolution of each hash level; HashEnc only.
  const std::vector<int>& hash_resolutions() const { return hash_res_; }
  std::size_t hash_table_size() const { return std::size_t{1} << config_.hash_log2_table; }

  /// Number of intermediate values one evaluation keeps for reverse mode.
  std::size_t tracked_values_per_eval() const;

 private:
  friend InrModel init_model(const InrConfig&, int, Rng&);
  friend InrModel assemble_model(const InrConfig&, int, std::vector<double>,
                                 std::vector<double>);

  InrConfig config_;
  int input_dim_ = 0;
  int encoded_dim_ = 0;
  std::vector<double> params_;
  std::vector<double> fourier_;
  std::vector<int> hash_res_;
  std::vector<DenseLayer> layers_;
  std::vector<ParamBlock> layout_;
};

InrModel init_model(const InrConfig& cfg, int d, Rng& rng);

/// Rebuilds a model from its configuration, flat parameters and (FFN) frozen
/// Fourier matrix without drawing random numbers.
InrModel assemble_model(const InrConfig& cfg, int d, std::vector<double> params,
                        std::vector<double> fourier);

/// Evaluates the network at `coords` (point-major, size B * d).
std::vector<double> eval(const InrModel& model, std::span<const double> coords);

/// Gradient of sum_i weights[i] * f(coords_i) with respect to the flat
/// parameters, from one reverse sweep. The result is added to `grad`.
void accumulate_weighted_param_grad(const InrModel& model, std::span<const double> coords,
                                    std::span<const double> weights, std::span<double> grad);

std::vector<double> weighted_param_grad(const InrModel& model, std::span<const double> coords,
                                        std::span<const double> weights);

/// FFN encodings of a fixed coordinate set, computed once. The Fourier
/// matrix is frozen, so repeated evaluations at the same points can skip the
/// sines and cosines. Holds nothing for the other architectures.
class EncodingCache {
 public:
  EncodingCache() = default;
  EncodingCache(const InrModel& model, std::span<const double> coords);
  /// True for an FFN model with the Fourier matrix the cache was built from.
  bool usable_for(const InrModel& model) const;
  std::size_t count() const { return count_; }
  std::size_t bytes() const { return encoded_.size() * sizeof(double); }
  const double* column(std::size_t i) const { return encoded_.data() + i * rows_; }

 private:
  std::vector<double> fourier_;
  int rows_ = 0;
  std::size_t count_ = 0;
  std::vector<double> encoded_;  // rows_ x count_, column-major
};

/// Network values at all cached points.
std::vector<double> eval(const InrModel& model, const EncodingCache& cache);
/// As the coordinate version, over the cached points `indices`.
void accumulate_weighted_param_grad(const InrModel& model, const EncodingCache& cache,
                                    std::span<const std::size_t> indices,
                                    std::span<const double> weights, std::span<double> grad);

std::vector<double> flatten_params(const InrModel& model);
InrModel unflatten_params(const InrModel& model, std::span<const double> flat);

/// Hash-table slot of integer lattice point `cell` (d entries) for a table of
/// size 2^log2_table.
std::uint32_t hash_index(std::span<const std::int64_t> cell, int log2_table);

}  // namespace inrct

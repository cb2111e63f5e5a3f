#include "inrct/inr.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace inrct {

namespace {

using Mat = Eigen::MatrixXd;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstWeights = Eigen::Map<const RowMat>;
using Weights = Eigen::Map<RowMat>;
using ConstBias = Eigen::Map<const Eigen::VectorXd>;
using Bias = Eigen::Map<Eigen::VectorXd>;

// Vectorized kernels pick their loop split from the operand addresses, so
// caller-owned buffers are copied into aligned storage before any product.
// Otherwise identical inputs at different addresses round differently.
Mat aligned_weights(const double* data, int rows, int cols) {
  return ConstWeights(data, rows, cols);
}

constexpr std::size_t kChunk = 2048;
constexpr std::uint32_t kPrimes[3] = {1u, 2654435761u, 805459861u};

// Fills in everything but parameter values.
void build_structure(const InrConfig& cfg, int d, int& encoded_dim, std::vector<int>& hash_res,
                     std::vector<DenseLayer>& layers, std::vector<ParamBlock>& layout,
                     std::size_t& num_params) {
  if (d != 2 && d != 3) throw std::invalid_argument("input dimension must be 2 or 3");
  if (cfg.hidden_width < 1 || cfg.hidden_layers < 1)
    throw std::invalid_argument("hidden width and layer count must be >= 1");

  std::size_t offset = 0;
  layout.clear();
  layers.clear();
  hash_res.clear();
  switch (cfg.arch) {
    case Arch::FFN:
      if (cfg.fourier_features < 1) throw std::invalid_argument("fourier_features must be >= 1");
      if (!(cfg.fourier_scale > 0.0)) throw std::invalid_argument("fourier_scale must be > 0");
      encoded_dim = 2 * cfg.fourier_features;
      break;
    case Arch::SIREN:
      if (!(cfg.first_omega > 0.0) || !(cfg.hidden_omega > 0.0))
        throw std::invalid_argument("SIREN frequencies must be > 0");
      encoded_dim = d;
      break;
    case Arch::HashEnc: {
      if (cfg.hash_levels < 1 || cfg.hash_features < 1)
        throw std::invalid_argument("hash levels and features must be >= 1");
      if (cfg.hash_log2_table < 1 || cfg.hash_log2_table > 30)
        throw std::invalid_argument("hash_log2_table must be in [1, 30]");
      if (cfg.hash_base_resolution < 1)
        throw std::invalid_argument("hash base resolution must be >= 1");
      const int levels = cfg.hash_levels;
      if (levels == 1) {
        hash_res.push_back(cfg.hash_base_resolution);
      } else {
        const double growth = std::exp((std::log(double(cfg.hash_max_resolution)) -
                                        std::log(double(cfg.hash_base_resolution))) /
                                       (levels - 1));
        for (int l = 0; l < levels; ++l) {
          const int res = static_cast<int>(std::floor(cfg.hash_base_resolution *
                                                      std::pow(growth, l) + 1e-9));
          if (!hash_res.empty() && res <= hash_res.back())
            throw std::invalid_argument(
                "hash resolutions must strictly increase; widen [base, max] or use fewer levels");
          hash_res.push_back(res);
        }
      }
      encoded_dim = levels * cfg.hash_features;
      const std::size_t table = (std::size_t{1} << cfg.hash_log2_table) * cfg.hash_features;
      for (int l = 0; l < levels; ++l) {
        layout.push_back({"hash_level" + std::to_string(l), offset, table});
        offset += table;
      }
      break;
    }
  }

  std::vector<int> widths{encoded_dim};
  for (int i = 0; i < cfg.hidden_layers; ++i) widths.push_back(cfg.hidden_width);
  widths.push_back(1);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    DenseLayer layer;
    layer.in = widths[l];
    layer.out = widths[l + 1];
    const bool last = l + 2 == widths.size();
    if (last) {
      layer.act = Activation::Identity;
    } else if (cfg.arch == Arch::SIREN) {
      layer.act = Activation::Sine;
      layer.omega = l == 0 ? cfg.first_omega : cfg.hidden_omega;
    } else {
      layer.act = Activation::ReLU;
    }
    const std::size_t wsize = static_cast<std::size_t>(layer.in) * layer.out;
    layer.weight_offset = offset;
    layout.push_back({"layer" + std::to_string(l) + ".weight", offset, wsize});
    offset += wsize;
    layer.bias_offset = offset;
    layout.push_back({"layer" + std::to_string(l) + ".bias", offset, std::size_t(layer.out)});
    offset += layer.out;
    layers.push_back(layer);
  }
  num_params = offset;
}

struct ChunkState {
  Mat encoded;
  std::vector<Mat> pre;   // pre-activations per layer
  std::vector<Mat> post;  // activations per layer
  // HashEnc stencils: per point, per level, per corner.
  std::vector<std::uint32_t> corner_slot;
  std::vector<double> corner_weight;
};

int corners(int d) { return 1 << d; }

void encode(const InrModel& m, std::span<const double> coords, std::size_t count, ChunkState& st,
            bool keep_stencil) {
  const int d = m.input_dim();
  const Mat x = Eigen::Map<const Mat>(coords.data(), d, static_cast<Eigen::Index>(count));
  switch (m.arch()) {
    case Arch::SIREN:
      st.encoded = x;
      break;
    case Arch::FFN: {
      const int nf = m.config().fourier_features;
      const Mat b = aligned_weights(m.fourier_matrix().data(), nf, d);
      const Mat phase = (2.0 * std::numbers::pi) * (b * x);
      st.encoded.resize(2 * nf, static_cast<Eigen::Index>(count));
      st.encoded.topRows(nf) = phase.array().cos().matrix();
      st.encoded.bottomRows(nf) = phase.array().sin().matrix();
      break;
    }
    case Arch::HashEnc: {
      const int levels = m.config().hash_levels;
      const int nfeat = m.config().hash_features;
      const int log2t = m.config().hash_log2_table;
      const std::size_t table = m.hash_table_size();
      const int nc = corners(d);
      const double* params = m.params().data();
      st.encoded.setZero(levels * nfeat, static_cast<Eigen::Index>(count));
      if (keep_stencil) {
        st.corner_slot.resize(count * levels * nc);
        st.corner_weight.resize(count * levels * nc);
      }
      std::int64_t cell[3];
      std::int64_t base[3];
      double frac[3];
      for (std::size_t p = 0; p < count; ++p) {
        for (int l = 0; l < levels; ++l) {
          const double res = m.hash_resolutions()[l];
          for (int a = 0; a < d; ++a) {
            const double pos = 0.5 * (coords[p * d + a] + 1.0) * res;
            const double fl = std::floor(pos);
            base[a] = static_cast<std::int64_t>(fl);
            frac[a] = pos - fl;
          }
          const double* level_table = params + static_cast<std::size_t>(l) * table * nfeat;
          for (int c = 0; c < nc; ++c) {
            double w = 1.0;
            for (int a = 0; a < d; ++a) {
              const int bit = (c >> a) & 1;
              cell[a] = base[a] + bit;
              w *= bit ? frac[a] : 1.0 - frac[a];
            }
            const std::uint32_t slot = hash_index(std::span<const std::int64_t>(cell, d), log2t);
            for (int f = 0; f < nfeat; ++f)
              st.encoded(l * nfeat + f, static_cast<Eigen::Index>(p)) +=
                  w * level_table[static_cast<std::size_t>(slot) * nfeat + f];
            if (keep_stencil) {
              const std::size_t k = (p * levels + l) * nc + c;
              st.corner_slot[k] = slot;
              st.corner_weight[k] = w;
            }
          }
        }
      }
      break;
    }
  }
}

// Runs the encoded chunk in st through the network; the output is the last
// entry of st.post. Intermediates stay in st for the backward sweep.
const Mat& forward_chunk(const InrModel& m, ChunkState& st) {
  const double* params = m.params().data();
  const auto& layers = m.layers();
  st.pre.resize(layers.size());
  st.post.resize(layers.size());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const DenseLayer& layer = layers[l];
    const Mat w = aligned_weights(params + layer.weight_offset, layer.out, layer.in);
    const Eigen::VectorXd b = ConstBias(params + layer.bias_offset, layer.out);
    const Mat& in = l == 0 ? st.encoded : st.post[l - 1];
    Mat& z = st.pre[l];
    z.noalias() = w * in;
    z.colwise() += b;
    Mat& a = st.post[l];
    switch (layer.act) {
      case Activation::ReLU:
        a = z.cwiseMax(0.0);
        break;
      case Activation::Sine:
        a = (layer.omega * z.array()).sin().matrix();
        break;
      case Activation::Identity:
        a = z;
        break;
    }
  }
  return st.post.back();
}

void check_coords(const InrModel& m, std::span<const double> coords) {
  if (m.input_dim() == 0) throw std::invalid_argument("model is not initialized");
  if (coords.size() % m.input_dim() != 0)
    throw std::invalid_argument("coordinate array length is not a multiple of d");
}

}  // namespace

std::string to_string(Arch arch) {
  switch (arch) {
    case Arch::FFN:
      return "ffn";
    case Arch::SIREN:
      return "siren";
    case Arch::HashEnc:
      return "hash";
  }
  return "?";
}

Arch parse_arch(const std::string& name) {
  if (name == "ffn" || name == "FFN") return Arch::FFN;
  if (name == "siren" || name == "SIREN") return Arch::SIREN;
  if (name == "hash" || name == "hashenc" || name == "HashEnc") return Arch::HashEnc;
  throw std::invalid_argument("unknown architecture '" + name + "'");
}

InrConfig default_config(Arch arch) {
  InrConfig cfg;
  cfg.arch = arch;
  if (arch == Arch::HashEnc) {
    cfg.hidden_width = 64;
    cfg.hidden_layers = 2;
  }
  return cfg;
}

std::uint32_t hash_index(std::span<const std::int64_t> cell, int log2_table) {
  std::uint32_t h = 0;
  for (std::size_t a = 0; a < cell.size(); ++a)
    h ^= static_cast<std::uint32_t>(cell[a]) * kPrimes[a];
  return h & ((std::uint32_t{1} << log2_table) - 1u);
}

std::size_t InrModel::tracked_values_per_eval() const {
  std::size_t count = static_cast<std::size_t>(input_dim_) + encoded_dim_;
  for (const DenseLayer& l : layers_)
    count += l.act == Activation::Identity ? l.out : 2 * static_cast<std::size_t>(l.out);
  return count;
}

InrModel init_model(const InrConfig& cfg, int d, Rng& rng) {
  InrModel m;
  m.config_ = cfg;
  m.input_dim_ = d;
  std::size_t p = 0;
  build_structure(cfg, d, m.encoded_dim_, m.hash_res_, m.layers_, m.layout_, p);
  m.params_.assign(p, 0.0);

  auto uniform = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };

  if (cfg.arch == Arch::FFN) {
    std::normal_distribution<double> normal(0.0, cfg.fourier_scale);
    m.fourier_.resize(static_cast<std::size_t>(cfg.fourier_features) * d);
    for (double& b : m.fourier_) b = normal(rng);
  }
  if (cfg.arch == Arch::HashEnc) {
    const std::size_t tables = m.layers_.front().weight_offset;
    for (std::size_t i = 0; i < tables; ++i) m.params_[i] = uniform(-1e-4, 1e-4);
  }
  for (std::size_t l = 0; l < m.layers_.size(); ++l) {
    const DenseLayer& layer = m.layers_[l];
    const double fan_in = layer.in;
    double wbound, bbound = 0.0;
    if (cfg.arch == Arch::SIREN) {
      wbound = l == 0 ? 1.0 / fan_in : std::sqrt(6.0 / fan_in) / cfg.hidden_omega;
      bbound = 1.0 / std::sqrt(fan_in);
    } else {
      wbound = std::sqrt(6.0 / fan_in);  // He uniform
    }
    double* w = m.params_.data() + layer.weight_offset;
    for (std::size_t i = 0; i < static_cast<std::size_t>(layer.in) * layer.out; ++i)
      w[i] = uniform(-wbound, wbound);
    double* b = m.params_.data() + layer.bias_offset;
    for (int i = 0; i < layer.out; ++i) b[i] = bbound > 0.0 ? uniform(-bbound, bbound) : 0.0;
  }
  return m;
}

InrModel assemble_model(const InrConfig& cfg, int d, std::vector<double> params,
                        std::vector<double> fourier) {
  InrModel m;
  m.config_ = cfg;
  m.input_dim_ = d;
  std::size_t p = 0;
  build_structure(cfg, d, m.encoded_dim_, m.hash_res_, m.layers_, m.layout_, p);
  if (params.size() != p) throw std::invalid_argument("parameter vector has wrong length");
  const std::size_t nb = cfg.arch == Arch::FFN ? std::size_t(cfg.fourier_features) * d : 0;
  if (fourier.size() != nb) throw std::invalid_argument("Fourier matrix has wrong size");
  m.params_ = std::move(params);
  m.fourier_ = std::move(fourier);
  return m;
}

namespace {

// Reverse sweep over one chunk whose forward intermediates are in st.
void backward_chunk(const InrModel& model, ChunkState& st, const double* weights,
                    std::size_t count, std::span<double> grad) {
  const auto& layers = model.layers();
  const double* params = model.params().data();
  Mat upstream = Eigen::Map<const Mat>(weights, 1, Eigen::Index(count));
  for (std::size_t li = layers.size(); li-- > 0;) {
    const DenseLayer& layer = layers[li];
    Mat delta;
    switch (layer.act) {
      case Activation::ReLU:
        delta = (st.pre[li].array() > 0.0).select(upstream.array(), 0.0).matrix();
        break;
      case Activation::Sine:
        delta = upstream.cwiseProduct(
            (layer.omega * (layer.omega * st.pre[li].array()).cos()).matrix());
        break;
      case Activation::Identity:
        delta = std::move(upstream);
        break;
    }
    const Mat& input = li == 0 ? st.encoded : st.post[li - 1];
    Weights dw(grad.data() + layer.weight_offset, layer.out, layer.in);
    Bias db(grad.data() + layer.bias_offset, layer.out);
    const Mat dw_chunk = delta * input.transpose();
    const Eigen::VectorXd db_chunk = delta.rowwise().sum();
    dw += dw_chunk;
    db += db_chunk;
    if (li > 0 || model.arch() == Arch::HashEnc) {
      const Mat w = aligned_weights(params + layer.weight_offset, layer.out, layer.in);
      upstream.noalias() = w.transpose() * delta;
    }
  }

  if (model.arch() == Arch::HashEnc) {
    // Colliding stencil corners accumulate into the shared entry.
    const int levels = model.config().hash_levels;
    const int nfeat = model.config().hash_features;
    const std::size_t table = model.hash_table_size();
    const int nc = corners(model.input_dim());
    for (std::size_t p = 0; p < count; ++p) {
      for (int l = 0; l < levels; ++l) {
        double* level_grad = grad.data() + static_cast<std::size_t>(l) * table * nfeat;
        for (int c = 0; c < nc; ++c) {
          const std::size_t k = (p * levels + l) * nc + c;
          const double w = st.corner_weight[k];
          double* entry = level_grad + static_cast<std::size_t>(st.corner_slot[k]) * nfeat;
          for (int f = 0; f < nfeat; ++f)
            entry[f] += w * upstream(l * nfeat + f, static_cast<Eigen::Index>(p));
        }
      }
    }
  }
}

void check_grad_args(const InrModel& model, std::size_t points, std::size_t weights,
                     std::size_t grad) {
  if (weights != points) throw std::invalid_argument("weights and coordinates differ in length");
  if (grad != model.num_params()) throw std::invalid_argument("gradient buffer has wrong length");
}

}  // namespace

std::vector<double> eval(const InrModel& model, std::span<const double> coords) {
  check_coords(model, coords);
  const int d = model.input_dim();
  const std::size_t total = coords.size() / d;
  std::vector<double> out(total);
  ChunkState st;
  for (std::size_t start = 0; start < total; start += kChunk) {
    const std::size_t count = std::min(kChunk, total - start);
    encode(model, coords.subspan(start * d, count * d), count, st, false);
    const Mat& y = forward_chunk(model, st);
    std::copy(y.data(), y.data() + count, out.begin() + static_cast<std::ptrdiff_t>(start));
  }
  return out;
}

void accumulate_weighted_param_grad(const InrModel& model, std::span<const double> coords,
                                    std::span<const double> weights, std::span<double> grad) {
  check_coords(model, coords);
  const int d = model.input_dim();
  const std::size_t total = coords.size() / d;
  check_grad_args(model, total, weights.size(), grad.size());
  ChunkState st;
  for (std::size_t start = 0; start < total; start += kChunk) {
    const std::size_t count = std::min(kChunk, total - start);
    encode(model, coords.subspan(start * d, count * d), count, st, true);
    forward_chunk(model, st);
    backward_chunk(model, st, weights.data() + start, count, grad);
  }
}

EncodingCache::EncodingCache(const InrModel& model, std::span<const double> coords) {
  if (model.arch() != Arch::FFN) return;
  check_coords(model, coords);
  const int d = model.input_dim();
  fourier_ = model.fourier_matrix();
  rows_ = model.encoded_dim();
  count_ = coords.size() / d;
  encoded_.resize(static_cast<std::size_t>(rows_) * count_);
  ChunkState st;
  for (std::size_t start = 0; start < count_; start += kChunk) {
    const std::size_t count = std::min(kChunk, count_ - start);
    encode(model, coords.subspan(start * d, count * d), count, st, false);
    std::copy(st.encoded.data(), st.encoded.data() + st.encoded.size(),
              encoded_.begin() + static_cast<std::ptrdiff_t>(start * rows_));
  }
}

bool EncodingCache::usable_for(const InrModel& model) const {
  return rows_ > 0 && model.arch() == Arch::FFN && model.encoded_dim() == rows_ &&
         model.fourier_matrix() == fourier_;
}

namespace {

void check_cache(const InrModel& model, const EncodingCache& cache) {
  if (!cache.usable_for(model))
    throw std::invalid_argument("encoding cache was built for a different model");
}

}  // namespace

std::vector<double> eval(const InrModel& model, const EncodingCache& cache) {
  check_cache(model, cache);
  const std::size_t total = cache.count();
  const Eigen::Index rows = model.encoded_dim();
  std::vector<double> out(total);
  ChunkState st;
  for (std::size_t start = 0; start < total; start += kChunk) {
    const std::size_t count = std::min(kChunk, total - start);
    st.encoded = Eigen::Map<const Mat>(cache.column(start), rows, Eigen::Index(count));
    const Mat& y = forward_chunk(model, st);
    std::copy(y.data(), y.data() + count, out.begin() + static_cast<std::ptrdiff_t>(start));
  }
  return out;
}

void accumulate_weighted_param_grad(const InrModel& model, const EncodingCache& cache,
                                    std::span<const std::size_t> indices,
                                    std::span<const double> weights, std::span<double> grad) {
  check_cache(model, cache);
  check_grad_args(model, indices.size(), weights.size(), grad.size());
  const Eigen::Index rows = model.encoded_dim();
  ChunkState st;
  for (std::size_t start = 0; start < indices.size(); start += kChunk) {
    const std::size_t count = std::min(kChunk, indices.size() - start);
    st.encoded.resize(rows, Eigen::Index(count));
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t i = indices[start + k];
      if (i >= cache.count()) throw std::invalid_argument("cache index out of range");
      std::copy_n(cache.column(i), rows, st.encoded.col(Eigen::Index(k)).data());
    }
    forward_chunk(model, st);
    backward_chunk(model, st, weights.data() + start, count, grad);
  }
}

std::vector<double> weighted_param_grad(const InrModel& model, std::span<const double> coords,
                                        std::span<const double> weights) {
  std::vector<double> grad(model.num_params(), 0.0);
  accumulate_weighted_param_grad(model, coords, weights, grad);
  return grad;
}

std::vector<double> flatten_params(const InrModel& model) {
  return {model.params().begin(), model.params().end()};
}

InrModel unflatten_params(const InrModel& model, std::span<const double> flat) {
  if (flat.size() != model.num_params())
    throw std::invalid_argument("flat parameter vector has wrong length");
  InrModel out = model;
  std::copy(flat.begin(), flat.end(), out.params().begin());
  return out;
}

}  // namespace inrct

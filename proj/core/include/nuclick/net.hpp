#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "nuclick/nn/ops.hpp"
#include "nuclick/raster.hpp"
#include "nuclick/signals.hpp"

namespace nuclick {

enum class ModelKind { Nucleus, Cell, Gland };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& s);

/// Architecture hyperparameters. Level l of the encoder/decoder carries
/// base_width * 2^l channels; the bottleneck carries base_width * 2^depth.
struct NetworkConfig {
  int input_channels = 5;
  int base_width = 8;
  int depth = 3;
  std::vector<int> ms_block_levels = {0, 1, 2};
  std::vector<int> ms_dilations = {1, 3, 6};
  int patch_size = 64;
  ModelKind kind = ModelKind::Nucleus;
  /// Dice term with 2 * intersection instead of the plain intersection.
  bool dice_factor_two = false;
  /// Ablation switch: when false the exclusion channel is always zero.
  bool use_exclusion = true;

  void validate() const;
  bool has_ms_block(int level) const;
  int width_at(int level) const { return base_width << level; }

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

/// Learnable tensors (in creation order) plus batch-norm running statistics.
template <class T>
class NetworkParams {
 public:
  NetworkConfig config;

  const nn::Var<T>& param(const std::string& name) const;
  nn::BatchNormState<T>& bn_state(const std::string& name);
  const nn::BatchNormState<T>& bn_state(const std::string& name) const;

  const std::vector<std::string>& param_names() const { return param_names_; }
  const std::vector<nn::Var<T>>& params() const { return params_; }
  const std::vector<std::string>& bn_names() const { return bn_names_; }
  std::vector<nn::BatchNormState<T>>& bn_states() { return bn_; }
  const std::vector<nn::BatchNormState<T>>& bn_states() const { return bn_; }

  /// Number of learnable scalars.
  std::size_t parameter_count() const;

  void add_param(const std::string& name, nn::Tensor<T> value);
  void add_bn(const std::string& name, int channels);

 private:
  std::vector<std::string> param_names_;
  std::vector<nn::Var<T>> params_;
  std::unordered_map<std::string, std::size_t> param_index_;
  std::vector<std::string> bn_names_;
  std::vector<nn::BatchNormState<T>> bn_;
  std::unordered_map<std::string, std::size_t> bn_index_;
};

namespace net {

/// Fresh parameters with He (fan-in) initialisation drawn from `rng`.
template <class T>
NetworkParams<T> build(const NetworkConfig& config, Rng& rng);

/// Probabilities (N, 1, H, W) for a (N, 5, H, W) input. Records on ctx.tape when present;
/// ctx.training selects batch statistics and updates the running ones.
template <class T>
nn::Var<T> forward(NetworkParams<T>& params, const nn::Var<T>& input, nn::Context<T>& ctx);

/// Eval-mode inference; never mutates `params`, safe to call concurrently.
template <class T>
nn::Tensor<T> predict(const NetworkParams<T>& params, const nn::Tensor<T>& input);

/// One (5, H, W) sample: RGB scaled to [0, 1], inclusion, exclusion.
void write_input(const RgbImage& patch, const GuidingSignal& signal, bool use_exclusion, nn::Tensor<float>& batch, int index);

nn::Tensor<float> make_input(const RgbImage& patch, const GuidingSignal& signal, bool use_exclusion);

ProbabilityMap prediction_map(const nn::Tensor<float>& output, int index = 0);

}  // namespace net
}  // namespace nuclick

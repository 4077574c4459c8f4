#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "nuclick/loss.hpp"
#include "nuclick/metrics.hpp"
#include "nuclick/net.hpp"
#include "nuclick/nn/optim.hpp"
#include "nuclick/synth.hpp"

namespace nuclick::trainer {

struct TrainConfig {
  std::filesystem::path train_data;
  /// Optional; must not overlap train_data.
  std::filesystem::path validation_data;
  NetworkConfig model;
  int epochs = 40;
  int batch_size = 16;
  double lr = 3e-3;
  double weight_decay = 5e-5;
  std::uint64_t seed = 1;
  bool augment = true;
  /// Training patches drawn from every image per epoch, each with its own target.
  int patches_per_image = 1;
  std::filesystem::path checkpoint;
  std::filesystem::path log;
  /// Also write <checkpoint stem>.epochK<ext> every K epochs (0 = final only).
  int checkpoint_every = 0;

  void validate() const;
};

/// Parses TOML with tables [data], [model], [train], [output]. Relative paths resolve against `base_dir`.
TrainConfig parse_train_config(const std::string& toml_text, const std::filesystem::path& base_dir = {});
TrainConfig load_train_config(const std::filesystem::path& path);

/// One network input with its supervision, all in patch space.
struct TrainingSample {
  RgbImage patch;
  GuidingSignal signal;
  BinaryMask target;
  BinaryMask excluded;
  PatchSpec window;
};

/// Picks a target uniformly, synthesises a fresh guiding signal and crops the patch around it.
TrainingSample make_sample(const synth::Sample& sample, const NetworkConfig& config, Rng& rng);

/// Guide window used for a gland inclusion map: squiggle rules applied to its bounding box.
PatchSpec window_for_mask(const BinaryMask& inclusion, int patch_size);

struct Batch {
  nn::Tensor<float> input;
  nn::Tensor<float> target;
  nn::Tensor<float> weights;
};

Batch make_batch(const std::vector<TrainingSample>& samples, const NetworkConfig& config);

/// One optimisation step; returns the batch loss.
LossTerms train_step(NetworkParams<float>& params, nn::OptimizerState<float>& optimizer, const Batch& batch);

struct TrainResult {
  NetworkParams<float> params;
  std::vector<double> epoch_loss;
};

using Progress = std::function<void(int epoch, double mean_loss)>;

/// In-memory training on an already loaded dataset. Deterministic for a fixed seed.
TrainResult train(const synth::Dataset& data, const TrainConfig& config, const Progress& progress = {});

/// Reads the datasets named in the config, trains, writes checkpoint and CSV log.
TrainResult train(const TrainConfig& config, const Progress& progress = {});

/// Throws InvalidConfig when one dataset path contains the other.
void require_separate(const std::filesystem::path& train_data, const std::filesystem::path& validation_data);

struct GuideMode {
  enum class Kind { GtInterior, GtCentroid, Jitter };
  Kind kind = Kind::GtCentroid;
  /// Jitter: the click is moved by this many pixels in a random direction.
  double sigma = 0.0;
};

/// "gt-interior", "gt-centroid" or "jitter:<sigma>".
GuideMode parse_guide_mode(const std::string& s);
std::string to_string(const GuideMode& mode);

/// Segments every ground-truth object of one image from synthesised guides and assembles the result.
LabelMap predict_instances(const NetworkParams<float>& params, const synth::Sample& sample, const GuideMode& mode, Rng& rng);

struct Evaluation {
  MetricReport mean;
  std::vector<MetricReport> per_image;
};

Evaluation evaluate(const NetworkParams<float>& params, const synth::Dataset& data, const GuideMode& mode,
                    std::uint64_t seed = 7);

}  // namespace nuclick::trainer

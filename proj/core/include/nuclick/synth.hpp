#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "nuclick/raster.hpp"

namespace nuclick::synth {

enum class ObjectKind { Nucleus, Cell, Gland };

std::string to_string(ObjectKind kind);
ObjectKind parse_object_kind(const std::string& s);

/// Generator parameters. Sizes are instance areas in pixels.
struct SynthConfig {
  Size canvas{96, 96};
  int min_objects = 3;
  int max_objects = 8;
  ObjectKind kind = ObjectKind::Nucleus;
  double min_size = 80.0;
  double max_size = 260.0;
  double touching_prob = 0.3;
  /// Standard deviation of the background/texture noise, in [0, 1] intensity units.
  double noise = 0.03;
  std::uint64_t seed = 1;
  /// Cells: width of the alpha ramp at the pasted border (0 = hard paste).
  double feather = 2.0;
  /// Glands: carve a lumen into every gland.
  bool lumen = true;
  /// Glands: probability that the lumen is labelled as part of the gland.
  double lumen_in_label_prob = 0.0;

  void validate() const;
  friend bool operator==(const SynthConfig&, const SynthConfig&) = default;
};

nlohmann::json to_json(const SynthConfig& c);
SynthConfig synth_config_from_json(const nlohmann::json& j);

struct Sample {
  RgbImage image;
  LabelMap labels;
};

Sample gen_nuclei(const SynthConfig& config);
Sample gen_cells(const SynthConfig& config);
Sample gen_glands(const SynthConfig& config);
/// Dispatches on config.kind.
Sample generate(const SynthConfig& config);

struct AugmentOptions {
  double flip_prob = 0.5;
  /// Additive offset drawn from [-brightness, brightness] (intensity units).
  double brightness = 0.08;
  /// Contrast factor drawn from [1 - contrast, 1 + contrast].
  double contrast = 0.15;
  double noise_sigma = 0.02;
};

RgbImage flip_horizontal(const RgbImage& image);
LabelMap flip_horizontal(const LabelMap& labels);
RgbImage flip_vertical(const RgbImage& image);
LabelMap flip_vertical(const LabelMap& labels);

/// Contrast about the image mean, brightness offset, additive Gaussian noise.
RgbImage photometric(const RgbImage& image, double brightness, double contrast, double noise_sigma, Rng& rng);

/// Joint random flips, then photometric changes to the image only.
Sample augment(const RgbImage& image, const LabelMap& labels, Rng& rng, const AugmentOptions& options = {});

struct Dataset {
  std::filesystem::path root;
  std::vector<std::string> names;  // "0000", "0001", ...
  std::vector<Sample> samples;
};

/// Writes images/NNNN.png, labels/NNNN.png (16-bit) and manifest.json. Image i uses seed config.seed + i.
void write_dataset(const std::filesystem::path& root, const SynthConfig& config, int count);

/// Reads every image listed under images/ with its label map. Throws IoError when unreadable.
Dataset load_dataset(const std::filesystem::path& root, bool require_labels = true);

}  // namespace nuclick::synth

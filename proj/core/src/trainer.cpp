#include "nuclick/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <toml.hpp>

#include "nuclick/checkpoint.hpp"
#include "nuclick/morph.hpp"
#include "nuclick/pipeline.hpp"

namespace nuclick::trainer {

void TrainConfig::validate() const {
  model.validate();
  if (epochs < 1) throw InvalidConfig("train: epochs must be positive");
  if (batch_size < 1) throw InvalidConfig("train: batch_size must be positive");
  if (patches_per_image < 1) throw InvalidConfig("train: patches_per_image must be positive");
  if (!(lr > 0.0) || !(weight_decay > 0.0)) throw InvalidConfig("train: lr and weight_decay must be positive");
  if (checkpoint_every < 0) throw InvalidConfig("train: checkpoint_every must be non-negative");
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

template <class T>
T get_or(const toml::table& t, std::string_view key, T fallback) {
  const auto* node = t.get(key);
  if (!node) return fallback;
  if (auto v = node->value<T>()) return *v;
  throw InvalidConfig("train config: wrong type for key '" + std::string(key) + "'");
}

std::vector<int> int_list(const toml::table& t, std::string_view key, std::vector<int> fallback) {
  const auto* node = t.get(key);
  if (!node) return fallback;
  const auto* arr = node->as_array();
  if (!arr) throw InvalidConfig("train config: '" + std::string(key) + "' must be an array");
  std::vector<int> out;
  for (const auto& e : *arr) {
    auto v = e.value<int64_t>();
    if (!v) throw InvalidConfig("train config: '" + std::string(key) + "' must hold integers");
    out.push_back(static_cast<int>(*v));
  }
  return out;
}

const toml::table& section(const toml::table& root, std::string_view name) {
  static const toml::table empty;
  const auto* node = root.get(name);
  if (!node) return empty;
  const auto* t = node->as_table();
  if (!t) throw InvalidConfig("train config: [" + std::string(name) + "] must be a table");
  return *t;
}

}  // namespace

TrainConfig parse_train_config(const std::string& toml_text, const std::filesystem::path& base_dir) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    throw InvalidConfig(std::string("train config: ") + std::string(e.description()));
  }
  TrainConfig c;
  const auto& data = section(root, "data");
  c.train_data = resolve(base_dir, get_or<std::string>(data, "train", ""));
  c.validation_data = resolve(base_dir, get_or<std::string>(data, "validation", ""));

  const auto& model = section(root, "model");
  c.model.kind = parse_model_kind(get_or<std::string>(model, "kind", to_string(c.model.kind)));
  c.model.base_width = static_cast<int>(get_or<int64_t>(model, "base_width", c.model.base_width));
  c.model.depth = static_cast<int>(get_or<int64_t>(model, "depth", c.model.depth));
  c.model.ms_block_levels = int_list(model, "ms_block_levels", c.model.ms_block_levels);
  c.model.ms_dilations = int_list(model, "ms_dilations", c.model.ms_dilations);
  c.model.patch_size = static_cast<int>(get_or<int64_t>(model, "patch_size", c.model.patch_size));
  c.model.use_exclusion = get_or<bool>(model, "use_exclusion", c.model.use_exclusion);
  c.model.dice_factor_two = get_or<bool>(model, "dice_factor_two", c.model.dice_factor_two);

  const auto& train = section(root, "train");
  c.epochs = static_cast<int>(get_or<int64_t>(train, "epochs", c.epochs));
  c.batch_size = static_cast<int>(get_or<int64_t>(train, "batch_size", c.batch_size));
  c.lr = get_or<double>(train, "lr", c.lr);
  c.weight_decay = get_or<double>(train, "weight_decay", c.weight_decay);
  c.seed = static_cast<std::uint64_t>(get_or<int64_t>(train, "seed", static_cast<int64_t>(c.seed)));
  c.augment = get_or<bool>(train, "augment", c.augment);
  c.patches_per_image = static_cast<int>(get_or<int64_t>(train, "patches_per_image", c.patches_per_image));

  const auto& output = section(root, "output");
  c.checkpoint = resolve(base_dir, get_or<std::string>(output, "checkpoint", ""));
  c.log = resolve(base_dir, get_or<std::string>(output, "log", ""));
  c.checkpoint_every = static_cast<int>(get_or<int64_t>(output, "checkpoint_every", c.checkpoint_every));
  c.validate();
  return c;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_train_config(ss.str(), path.parent_path());
}

PatchSpec window_for_mask(const BinaryMask& inclusion, int patch_size) {
  Squiggle bbox;
  bbox.polylines.emplace_back();
  for (int y = 0; y < inclusion.height(); ++y) {
    for (int x = 0; x < inclusion.width(); ++x) {
      if (inclusion(x, y)) bbox.polylines[0].push_back({double(x), double(y)});
    }
  }
  if (bbox.polylines[0].empty()) throw InvalidInput("window_for_mask: empty inclusion map");
  return signals::patch_for_squiggle(inclusion.size(), bbox, patch_size);
}

TrainingSample make_sample(const synth::Sample& sample, const NetworkConfig& config, Rng& rng) {
  const Label count = max_label(sample.labels);
  if (count == 0) throw InvalidInput("make_sample: image has no instances");
  const auto target = static_cast<Label>(std::uniform_int_distribution<Label>(1, count)(rng));

  GuidingSignal image_signal;
  PatchSpec window;
  if (config.kind == ModelKind::Gland) {
    image_signal = signals::train_signal_gland(sample.labels, target, rng).signal;
    window = window_for_mask(image_signal.inclusion, config.patch_size);
  } else {
    image_signal = signals::train_signal_nucleus(sample.labels, target, rng);
    Point click{};
    for (int y = 0; y < image_signal.inclusion.height(); ++y) {
      for (int x = 0; x < image_signal.inclusion.width(); ++x) {
        if (image_signal.inclusion(x, y)) click = {x, y};
      }
    }
    window = signals::patch_for_click(sample.image.size(), click, config.patch_size);
  }

  TrainingSample s;
  s.window = window;
  s.patch = signals::extract_image(sample.image, window);
  s.signal.inclusion = signals::extract_guide(image_signal.inclusion, window);
  s.signal.exclusion = signals::extract_guide(image_signal.exclusion, window);
  const LabelMap labels = signals::extract_labels(sample.labels, window);
  s.target = BinaryMask(labels.size());
  s.excluded = BinaryMask(labels.size());
  for (std::size_t i = 0; i < labels.pixel_count(); ++i) {
    s.target[i] = labels[i] == target;
    s.excluded[i] = labels[i] != 0 && labels[i] != target;
  }
  return s;
}

Batch make_batch(const std::vector<TrainingSample>& samples, const NetworkConfig& config) {
  const int n = static_cast<int>(samples.size());
  const int side = config.patch_size;
  Batch b{nn::Tensor<float>({n, config.input_channels, side, side}), nn::Tensor<float>({n, 1, side, side}),
          nn::Tensor<float>({n, 1, side, side})};
  const std::size_t plane = static_cast<std::size_t>(side) * side;
  for (int k = 0; k < n; ++k) {
    const auto& s = samples[static_cast<std::size_t>(k)];
    if (s.patch.width() != side || s.patch.height() != side) throw InvalidInput("make_batch: patch size differs from the model");
    net::write_input(s.patch, s.signal, config.use_exclusion, b.input, k);
    // An empty target (possible after resampling) contributes plain cross entropy.
    const WeightMap w = count_foreground(s.target) ? weight_map(s.target, s.excluded) : WeightMap(s.target.size(), 1.0);
    for (std::size_t i = 0; i < plane; ++i) {
      b.target[k * plane + i] = s.target[i] ? 1.0f : 0.0f;
      b.weights[k * plane + i] = static_cast<float>(w[i]);
    }
  }
  return b;
}

LossTerms train_step(NetworkParams<float>& params, nn::OptimizerState<float>& optimizer, const Batch& batch) {
  nn::Tape<float> tape;
  nn::Context<float> ctx{&tape, true};
  const auto p = net::forward(params, nn::constant(batch.input), ctx);
  LossOptions options;
  options.dice_factor_two = params.config.dice_factor_two;
  LossTerms terms;
  const auto loss = nn::hybrid_loss(ctx, p, batch.target, batch.weights, options, &terms);
  tape.backward(loss);
  nn::adam_step(params.params(), optimizer);
  nn::zero_grad(params.params());
  return terms;
}

namespace {

std::filesystem::path epoch_checkpoint(const std::filesystem::path& path, int epoch) {
  auto out = path;
  out.replace_filename(path.stem().string() + ".epoch" + std::to_string(epoch) + path.extension().string());
  return out;
}

}  // namespace

TrainResult train(const synth::Dataset& data, const TrainConfig& config, const Progress& progress) {
  config.validate();
  if (data.samples.empty()) throw InvalidInput("train: empty dataset");
  Rng rng(config.seed);
  TrainResult result{net::build<float>(config.model, rng), {}};
  nn::OptimizerState<float> optimizer;
  optimizer.options.lr = config.lr;
  optimizer.options.weight_decay = config.weight_decay;

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    if (max_label(data.samples[i].labels) == 0) continue;
    for (int r = 0; r < config.patches_per_image; ++r) order.push_back(i);
  }
  if (order.empty()) throw InvalidInput("train: no image has instances");

  std::ofstream log;
  if (!config.log.empty()) {
    if (config.log.has_parent_path()) std::filesystem::create_directories(config.log.parent_path());
    log.open(config.log, std::ios::trunc);
    if (!log) throw IoError("cannot write " + config.log.string());
    log << "epoch,mean_loss,lr\n";
  }

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t first = 0; first < order.size(); first += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t last = std::min(order.size(), first + static_cast<std::size_t>(config.batch_size));
      std::vector<TrainingSample> samples;
      for (std::size_t k = first; k < last; ++k) {
        const auto& source = data.samples[order[k]];
        if (config.augment) {
          samples.push_back(make_sample(synth::augment(source.image, source.labels, rng), config.model, rng));
        } else {
          samples.push_back(make_sample(source, config.model, rng));
        }
      }
      const auto terms = train_step(result.params, optimizer, make_batch(samples, config.model));
      loss_sum += terms.total() * static_cast<double>(samples.size());
      seen += samples.size();
    }
    const double mean = loss_sum / static_cast<double>(seen);
    result.epoch_loss.push_back(mean);
    if (log) {
      log << epoch << ',' << std::setprecision(10) << mean << ',' << config.lr << '\n';
      log.flush();
    }
    if (config.checkpoint_every > 0 && epoch % config.checkpoint_every == 0 && !config.checkpoint.empty()) {
      checkpoint::save(result.params, epoch_checkpoint(config.checkpoint, epoch));
    }
    if (progress) progress(epoch, mean);
  }
  if (!config.checkpoint.empty()) checkpoint::save(result.params, config.checkpoint);
  return result;
}

void require_separate(const std::filesystem::path& train_data, const std::filesystem::path& validation_data) {
  if (train_data.empty() || validation_data.empty()) return;
  const auto a = std::filesystem::weakly_canonical(std::filesystem::absolute(train_data));
  const auto b = std::filesystem::weakly_canonical(std::filesystem::absolute(validation_data));
  auto within = [](const std::filesystem::path& inner, const std::filesystem::path& outer) {
    auto i = inner.begin();
    for (auto o = outer.begin(); o != outer.end(); ++o, ++i) {
      if (o->empty()) continue;  // trailing separator
      if (i == inner.end() || *i != *o) return false;
    }
    return true;
  };
  if (within(a, b) || within(b, a)) throw InvalidConfig("training and validation data must not overlap: " + a.string() + " / " + b.string());
}

TrainResult train(const TrainConfig& config, const Progress& progress) {
  config.validate();
  if (config.train_data.empty()) throw InvalidConfig("train: [data] train path missing");
  require_separate(config.train_data, config.validation_data);
  const auto data = synth::load_dataset(config.train_data);
  return train(data, config, progress);
}

GuideMode parse_guide_mode(const std::string& s) {
  if (s == "gt-interior") return {GuideMode::Kind::GtInterior, 0.0};
  if (s == "gt-centroid") return {GuideMode::Kind::GtCentroid, 0.0};
  const std::string prefix = "jitter:";
  if (s.rfind(prefix, 0) == 0) {
    std::size_t used = 0;
    double sigma = -1.0;
    try {
      sigma = std::stod(s.substr(prefix.size()), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size() - prefix.size() || !(sigma >= 0.0)) throw InvalidConfig("bad jitter amount in guide mode: " + s);
    return {GuideMode::Kind::Jitter, sigma};
  }
  throw InvalidConfig("guide mode must be gt-interior, gt-centroid or jitter:<sigma>, got " + s);
}

std::string to_string(const GuideMode& mode) {
  switch (mode.kind) {
    case GuideMode::Kind::GtInterior: return "gt-interior";
    case GuideMode::Kind::GtCentroid: return "gt-centroid";
    case GuideMode::Kind::Jitter: {
      std::ostringstream os;
      os << "jitter:" << mode.sigma;
      return os.str();
    }
  }
  return "gt-centroid";
}

namespace {

// Gland objects: the skeleton of the whole ground-truth mask stands in for the user's squiggle.
std::vector<ObjectResult> predict_glands(const NetworkParams<float>& params, const synth::Sample& sample,
                                         const std::vector<Label>& ids) {
  const auto& config = params.config;
  const int side = config.patch_size;
  std::vector<Point> centroids;
  for (Label id : ids) centroids.push_back(morph::centroid(sample.labels, id));
  nn::Tensor<float> batch({static_cast<int>(ids.size()), config.input_channels, side, side});
  std::vector<GuidingSignal> guides;
  std::vector<PatchSpec> windows;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const BinaryMask inclusion = signals::gland_inclusion_at(mask_of(sample.labels, ids[k]), 0.0);
    const PatchSpec w = window_for_mask(inclusion, side);
    GuidingSignal g{signals::extract_guide(inclusion, w), BinaryMask(w.size)};
    for (std::size_t j = 0; j < ids.size(); ++j) {
      if (j == k) continue;
      const Point p = w.image_to_patch(centroids[j]);
      if (w.contains_patch_pixel(p) && !g.inclusion.at(p)) g.exclusion.at(p) = 1;
    }
    net::write_input(signals::extract_image(sample.image, w), g, config.use_exclusion, batch, static_cast<int>(k));
    guides.push_back(std::move(g));
    windows.push_back(w);
  }
  const auto probs = net::predict(params, batch);
  std::vector<ObjectResult> out;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const auto mask = postproc::clean(postproc::binarize(net::prediction_map(probs, static_cast<int>(k))), guides[k].inclusion);
    out.push_back({windows[k], mask, ids[k]});
  }
  return out;
}

}  // namespace

LabelMap predict_instances(const NetworkParams<float>& params, const synth::Sample& sample, const GuideMode& mode, Rng& rng) {
  std::vector<Label> ids;
  const auto area = morph::areas(sample.labels);
  for (Label k = 1; k < area.size(); ++k) {
    if (area[k] > 0) ids.push_back(k);
  }
  if (ids.empty()) return LabelMap(sample.labels.size());
  if (params.config.kind == ModelKind::Gland) return postproc::assemble(predict_glands(params, sample, ids), sample.labels.size());

  // Every object gets one click; it is the inclusion point for that object and an exclusion
  // point for all the others.
  std::vector<Point> clicks;
  for (Label id : ids) {
    switch (mode.kind) {
      case GuideMode::Kind::GtInterior:
        clicks.push_back(morph::sample_interior_point(mask_of(sample.labels, id), signals::kInteriorMargin, rng));
        break;
      case GuideMode::Kind::GtCentroid:
        clicks.push_back(morph::centroid(sample.labels, id));
        break;
      case GuideMode::Kind::Jitter:
        clicks.push_back(signals::displace_click(morph::centroid(sample.labels, id), mode.sigma, sample.labels.size(), rng));
        break;
    }
  }
  std::vector<pipeline::Request> requests;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    pipeline::Request r;
    r.input.kind = GuideInput::Kind::Click;
    r.input.points = {{double(clicks[k].x), double(clicks[k].y)}};
    r.object_id = ids[k];
    for (std::size_t j = 0; j < ids.size(); ++j) {
      if (j != k) r.others.push_back(clicks[j]);
    }
    requests.push_back(std::move(r));
  }
  return postproc::assemble(pipeline::segment(params, sample.image, requests), sample.labels.size());
}

Evaluation evaluate(const NetworkParams<float>& params, const synth::Dataset& data, const GuideMode& mode, std::uint64_t seed) {
  Evaluation e;
  Rng rng(seed);
  for (const auto& s : data.samples) {
    if (s.labels.empty()) throw InvalidInput("evaluate: dataset image without labels");
    e.per_image.push_back(metrics::evaluate(s.labels, predict_instances(params, s, mode, rng)));
  }
  e.mean = metrics::average(e.per_image);
  return e;
}

}  // namespace nuclick::trainer

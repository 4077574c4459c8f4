#include "nuclick/net.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace nuclick {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Nucleus:
      return "nucleus";
    case ModelKind::Cell:
      return "cell";
    case ModelKind::Gland:
      return "gland";
  }
  return "nucleus";
}

ModelKind parse_model_kind(const std::string& s) {
  if (s == "nucleus") return ModelKind::Nucleus;
  if (s == "cell") return ModelKind::Cell;
  if (s == "gland") return ModelKind::Gland;
  throw InvalidConfig("unknown model kind '" + s + "'");
}

void NetworkConfig::validate() const {
  if (input_channels != 5) throw InvalidConfig("input_channels must be 5");
  if (base_width < 1) throw InvalidConfig("base_width must be positive");
  if (depth < 1 || depth > 8) throw InvalidConfig("depth must be in [1, 8]");
  std::set<int> seen;
  for (int l : ms_block_levels) {
    if (l < 0 || l >= depth) throw InvalidConfig("ms_block_levels entries must lie in [0, depth)");
    if (!seen.insert(l).second) throw InvalidConfig("duplicate ms_block_levels entry");
  }
  if (!ms_block_levels.empty() && ms_dilations.empty()) throw InvalidConfig("ms_dilations must be nonempty");
  for (int d : ms_dilations) {
    if (d < 1) throw InvalidConfig("ms_dilations must be positive");
  }
  if (patch_size < 1 || patch_size % (1 << depth) != 0) {
    throw InvalidConfig("patch_size must be a positive multiple of 2^depth");
  }
}

bool NetworkConfig::has_ms_block(int level) const {
  return std::find(ms_block_levels.begin(), ms_block_levels.end(), level) != ms_block_levels.end();
}

template <class T>
const nn::Var<T>& NetworkParams<T>::param(const std::string& name) const {
  auto it = param_index_.find(name);
  if (it == param_index_.end()) throw NotFound("no parameter '" + name + "'");
  return params_[it->second];
}

template <class T>
nn::BatchNormState<T>& NetworkParams<T>::bn_state(const std::string& name) {
  auto it = bn_index_.find(name);
  if (it == bn_index_.end()) throw NotFound("no batch-norm state '" + name + "'");
  return bn_[it->second];
}

template <class T>
const nn::BatchNormState<T>& NetworkParams<T>::bn_state(const std::string& name) const {
  auto it = bn_index_.find(name);
  if (it == bn_index_.end()) throw NotFound("no batch-norm state '" + name + "'");
  return bn_[it->second];
}

template <class T>
std::size_t NetworkParams<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.numel();
  return n;
}

template <class T>
void NetworkParams<T>::add_param(const std::string& name, nn::Tensor<T> value) {
  if (param_index_.count(name)) throw InvalidConfig("duplicate parameter '" + name + "'");
  param_index_[name] = params_.size();
  param_names_.push_back(name);
  params_.push_back(nn::variable(std::move(value)));
}

template <class T>
void NetworkParams<T>::add_bn(const std::string& name, int channels) {
  if (bn_index_.count(name)) throw InvalidConfig("duplicate batch-norm '" + name + "'");
  bn_index_[name] = bn_.size();
  bn_names_.push_back(name);
  bn_.emplace_back(channels);
}

template class NetworkParams<float>;
template class NetworkParams<double>;

namespace net {

namespace {

std::string level_name(const char* side, int level) { return std::string(side) + std::to_string(level); }

// The architecture is walked by a single routine for both building and running,
// so the parameter layout cannot drift between the two.
template <class T>
class Walker {
 public:
  // Build mode.
  Walker(NetworkParams<T>& params, Rng& rng) : params_(params), rng_(&rng) {}
  // Run mode.
  Walker(NetworkParams<T>& params, nn::Context<T>& ctx) : params_(params), ctx_(&ctx) {}

  nn::Var<T> conv(const std::string& name, const nn::Var<T>& x, int cin, int cout, int k, int dilation = 1) {
    if (rng_) {
      const double fan_in = static_cast<double>(cin) * k * k;
      std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
      nn::Tensor<T> w({cout, cin, k, k});
      for (auto& v : w.storage()) v = static_cast<T>(dist(*rng_));
      params_.add_param(name + ".weight", std::move(w));
      params_.add_param(name + ".bias", nn::Tensor<T>({cout}));
      return nullptr;
    }
    return nn::conv2d(*ctx_, x, params_.param(name + ".weight"), params_.param(name + ".bias"), 1, dilation);
  }

  nn::Var<T> conv_bn(const std::string& name, const nn::Var<T>& x, int cin, int cout, int k, int dilation, bool activate) {
    auto y = conv(name, x, cin, cout, k, dilation);
    if (rng_) {
      params_.add_param(name + ".bn.gamma", nn::Tensor<T>({cout}, T(1)));
      params_.add_param(name + ".bn.beta", nn::Tensor<T>({cout}));
      params_.add_bn(name + ".bn", cout);
      return nullptr;
    }
    y = nn::batchnorm(*ctx_, y, params_.param(name + ".bn.gamma"), params_.param(name + ".bn.beta"),
                      params_.bn_state(name + ".bn"));
    return activate ? nn::relu(*ctx_, y) : y;
  }

  nn::Var<T> residual(const std::string& name, const nn::Var<T>& x, int cin, int cout) {
    auto h = conv_bn(name + ".conv1", x, cin, cout, 3, 1, true);
    h = conv_bn(name + ".conv2", h, cout, cout, 3, 1, false);
    nn::Var<T> shortcut = x;
    if (cin != cout) shortcut = conv(name + ".proj", x, cin, cout, 1);
    if (rng_) return nullptr;
    return nn::relu(*ctx_, nn::add(*ctx_, h, shortcut));
  }

  nn::Var<T> multi_scale(const std::string& name, const nn::Var<T>& x, int channels, const std::vector<int>& dilations) {
    std::vector<nn::Var<T>> branches;
    for (std::size_t i = 0; i < dilations.size(); ++i) {
      branches.push_back(conv_bn(name + ".branch" + std::to_string(i), x, channels, channels, 3, dilations[i], true));
    }
    const int joined = channels * static_cast<int>(dilations.size());
    if (rng_) {
      conv_bn(name + ".fuse", nullptr, joined, channels, 1, 1, true);
      return nullptr;
    }
    return conv_bn(name + ".fuse", nn::concat(*ctx_, branches), joined, channels, 1, 1, true);
  }

  nn::Var<T> upsample(const std::string& name, const nn::Var<T>& x, int cin, int cout) {
    if (rng_) {
      const double fan_in = static_cast<double>(cin);
      std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
      nn::Tensor<T> w({cin, cout, 2, 2});
      for (auto& v : w.storage()) v = static_cast<T>(dist(*rng_));
      params_.add_param(name + ".weight", std::move(w));
      params_.add_param(name + ".bias", nn::Tensor<T>({cout}));
      return nullptr;
    }
    return nn::up2(*ctx_, x, params_.param(name + ".weight"), params_.param(name + ".bias"));
  }

  nn::Var<T> run(const nn::Var<T>& input) {
    const auto& cfg = params_.config;
    nn::Var<T> x = conv_bn("stem", input, cfg.input_channels, cfg.base_width, 3, 1, true);
    int cin = cfg.base_width;
    std::vector<nn::Var<T>> skips;
    for (int l = 0; l < cfg.depth; ++l) {
      const int c = cfg.width_at(l);
      const auto name = level_name("enc", l);
      x = residual(name + ".res", x, cin, c);
      if (cfg.has_ms_block(l)) x = multi_scale(name + ".ms", x, c, cfg.ms_dilations);
      skips.push_back(x);
      if (!rng_) x = nn::down2(*ctx_, x);
      cin = c;
    }
    const int bottom = cfg.width_at(cfg.depth);
    x = residual("bottleneck.res", x, cin, bottom);
    cin = bottom;
    for (int l = cfg.depth - 1; l >= 0; --l) {
      const int c = cfg.width_at(l);
      const auto name = level_name("dec", l);
      x = upsample(name + ".up", x, cin, c);
      if (!rng_) x = nn::concat(*ctx_, std::vector<nn::Var<T>>{x, skips[static_cast<std::size_t>(l)]});
      x = residual(name + ".res", x, 2 * c, c);
      if (cfg.has_ms_block(l)) x = multi_scale(name + ".ms", x, c, cfg.ms_dilations);
      cin = c;
    }
    x = conv("head", x, cfg.base_width, 1, 1);
    if (rng_) return nullptr;
    return nn::sigmoid(*ctx_, x);
  }

 private:
  NetworkParams<T>& params_;
  Rng* rng_ = nullptr;
  nn::Context<T>* ctx_ = nullptr;
};

}  // namespace

template <class T>
NetworkParams<T> build(const NetworkConfig& config, Rng& rng) {
  config.validate();
  NetworkParams<T> params;
  params.config = config;
  Walker<T>(params, rng).run(nullptr);
  return params;
}

template <class T>
nn::Var<T> forward(NetworkParams<T>& params, const nn::Var<T>& input, nn::Context<T>& ctx) {
  const auto& s = input->value.shape();
  if (s.size() != 4 || s[1] != params.config.input_channels) {
    throw InvalidInput("forward: expected (N, 5, H, W) input, got " + nn::shape_string(s));
  }
  const int div = 1 << params.config.depth;
  if (s[2] % div || s[3] % div) throw InvalidInput("forward: spatial size must be divisible by 2^depth");
  return Walker<T>(params, ctx).run(input);
}

template <class T>
nn::Tensor<T> predict(const NetworkParams<T>& params, const nn::Tensor<T>& input) {
  nn::Context<T> ctx;
  // Eval mode without a tape only reads parameters and running statistics.
  auto& mutable_params = const_cast<NetworkParams<T>&>(params);
  return forward(mutable_params, nn::constant(input), ctx)->value;
}

template NetworkParams<float> build(const NetworkConfig&, Rng&);
template NetworkParams<double> build(const NetworkConfig&, Rng&);
template nn::Var<float> forward(NetworkParams<float>&, const nn::Var<float>&, nn::Context<float>&);
template nn::Var<double> forward(NetworkParams<double>&, const nn::Var<double>&, nn::Context<double>&);
template nn::Tensor<float> predict(const NetworkParams<float>&, const nn::Tensor<float>&);
template nn::Tensor<double> predict(const NetworkParams<double>&, const nn::Tensor<double>&);

void write_input(const RgbImage& patch, const GuidingSignal& signal, bool use_exclusion, nn::Tensor<float>& batch, int index) {
  const int h = patch.height();
  const int w = patch.width();
  if (batch.rank() != 4 || batch.c() != 5 || batch.h() != h || batch.w() != w) throw InvalidInput("write_input: shape mismatch");
  require_same_size(patch, signal.inclusion, "write_input");
  require_same_size(patch, signal.exclusion, "write_input");
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Rgb& px = patch(x, y);
      batch.at(index, 0, y, x) = px.r / 255.0f;
      batch.at(index, 1, y, x) = px.g / 255.0f;
      batch.at(index, 2, y, x) = px.b / 255.0f;
      batch.at(index, 3, y, x) = signal.inclusion(x, y) ? 1.0f : 0.0f;
      batch.at(index, 4, y, x) = use_exclusion && signal.exclusion(x, y) ? 1.0f : 0.0f;
    }
  }
}

nn::Tensor<float> make_input(const RgbImage& patch, const GuidingSignal& signal, bool use_exclusion) {
  nn::Tensor<float> t({1, 5, patch.height(), patch.width()});
  write_input(patch, signal, use_exclusion, t, 0);
  return t;
}

ProbabilityMap prediction_map(const nn::Tensor<float>& output, int index) {
  ProbabilityMap p(output.w(), output.h());
  for (int y = 0; y < output.h(); ++y) {
    for (int x = 0; x < output.w(); ++x) p(x, y) = output.at(index, 0, y, x);
  }
  return p;
}

}  // namespace net
}  // namespace nuclick

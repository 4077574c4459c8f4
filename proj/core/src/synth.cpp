#include "nuclick/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "nuclick/morph.hpp"
#include "nuclick/png_io.hpp"

namespace nuclick::synth {

std::string to_string(ObjectKind kind) {
  switch (kind) {
    case ObjectKind::Nucleus: return "nucleus";
    case ObjectKind::Cell: return "cell";
    case ObjectKind::Gland: return "gland";
  }
  return "nucleus";
}

ObjectKind parse_object_kind(const std::string& s) {
  if (s == "nucleus" || s == "nuclei") return ObjectKind::Nucleus;
  if (s == "cell" || s == "cells") return ObjectKind::Cell;
  if (s == "gland" || s == "glands") return ObjectKind::Gland;
  throw InvalidConfig("unknown object kind: " + s);
}

void SynthConfig::validate() const {
  if (canvas.width < 8 || canvas.height < 8) throw InvalidConfig("synth: canvas must be at least 8x8");
  if (min_objects < 0 || max_objects < min_objects) throw InvalidConfig("synth: empty object count range");
  if (!(min_size >= 1.0) || max_size < min_size) throw InvalidConfig("synth: empty size range");
  if (touching_prob < 0.0 || touching_prob > 1.0) throw InvalidConfig("synth: touching_prob outside [0, 1]");
  if (lumen_in_label_prob < 0.0 || lumen_in_label_prob > 1.0) throw InvalidConfig("synth: lumen_in_label_prob outside [0, 1]");
  if (noise < 0.0 || feather < 0.0) throw InvalidConfig("synth: negative noise or feather");
}

nlohmann::json to_json(const SynthConfig& c) {
  return {{"canvas", {c.canvas.width, c.canvas.height}},
          {"objects", {c.min_objects, c.max_objects}},
          {"kind", to_string(c.kind)},
          {"size", {c.min_size, c.max_size}},
          {"touching_prob", c.touching_prob},
          {"noise", c.noise},
          {"seed", c.seed},
          {"feather", c.feather},
          {"lumen", c.lumen},
          {"lumen_in_label_prob", c.lumen_in_label_prob}};
}

SynthConfig synth_config_from_json(const nlohmann::json& j) {
  SynthConfig c;
  try {
    if (j.contains("canvas")) c.canvas = {j["canvas"][0].get<int>(), j["canvas"][1].get<int>()};
    if (j.contains("objects")) {
      c.min_objects = j["objects"][0].get<int>();
      c.max_objects = j["objects"][1].get<int>();
    }
    if (j.contains("kind")) c.kind = parse_object_kind(j["kind"].get<std::string>());
    if (j.contains("size")) {
      c.min_size = j["size"][0].get<double>();
      c.max_size = j["size"][1].get<double>();
    }
    c.touching_prob = j.value("touching_prob", c.touching_prob);
    c.noise = j.value("noise", c.noise);
    c.seed = j.value("seed", c.seed);
    c.feather = j.value("feather", c.feather);
    c.lumen = j.value("lumen", c.lumen);
    c.lumen_in_label_prob = j.value("lumen_in_label_prob", c.lumen_in_label_prob);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfig(std::string("synth config: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kPlacementTries = 60;

using Color = std::array<double, 3>;

// Ellipse, optionally with a wavy outline: rho <= 1 is inside.
struct Shape {
  double cx = 0, cy = 0;
  double a = 1, b = 1;
  double theta = 0;
  std::vector<std::array<double, 3>> harmonics;  // {order, amplitude, phase}

  double rho(double x, double y) const {
    const double dx = x - cx;
    const double dy = y - cy;
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const double u = (c * dx + s * dy) / a;
    const double v = (-s * dx + c * dy) / b;
    double r = std::hypot(u, v);
    if (!harmonics.empty()) {
      const double phi = std::atan2(v, u);
      double wave = 1.0;
      for (const auto& h : harmonics) wave += h[1] * std::cos(h[0] * phi + h[2]);
      r /= wave;
    }
    return r;
  }

  double bound() const {
    double w = 1.0;
    for (const auto& h : harmonics) w += std::abs(h[1]);
    return std::max(a, b) * w;
  }

  // Distance from the centre to the outline along direction psi.
  double reach(double psi) const {
    const double dx = std::cos(psi);
    const double dy = std::sin(psi);
    double t = 0.0;
    while (t < 4.0 * bound() && rho(cx + t * dx, cy + t * dy) <= 1.0) t += 0.25;
    return t;
  }
};

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

Shape random_ellipse(Rng& rng, double area) {
  const double aspect = uniform(rng, 1.0, 1.6);
  Shape s;
  s.a = std::sqrt(area * aspect / kPi);
  s.b = std::sqrt(area / (aspect * kPi));
  s.theta = uniform(rng, 0.0, kPi);
  return s;
}

bool fits(const Shape& s, Size canvas) {
  const double m = s.bound() + 1.0;
  return s.cx - m >= 0 && s.cy - m >= 0 && s.cx + m <= canvas.width - 1 && s.cy + m <= canvas.height - 1;
}

// Bounding box of a shape clipped to the canvas.
struct Box {
  int x0, y0, x1, y1;
};

Box box_of(const Shape& s, Size canvas, double pad = 1.0) {
  const double m = s.bound() + pad;
  return {std::max(0, static_cast<int>(std::floor(s.cx - m))), std::max(0, static_cast<int>(std::floor(s.cy - m))),
          std::min(canvas.width - 1, static_cast<int>(std::ceil(s.cx + m))),
          std::min(canvas.height - 1, static_cast<int>(std::ceil(s.cy + m)))};
}

// Owner map: instance index + 1 of the shape with the smallest normalised radius.
class Layout {
 public:
  explicit Layout(Size canvas) : canvas_(canvas), owner_(canvas), rho_(canvas, 1e9) {}

  const std::vector<Shape>& shapes() const { return shapes_; }
  Size canvas() const { return canvas_; }

  // True when the shape stays clear (by `gap` pixels) of every instance except `partner`.
  bool clear(const Shape& s, double gap, Label partner) const {
    const Box bb = box_of(s, canvas_, gap + 1.0);
    const double grow = 1.0 + gap / std::min(s.a, s.b);
    for (int y = bb.y0; y <= bb.y1; ++y) {
      for (int x = bb.x0; x <= bb.x1; ++x) {
        const Label o = owner_(x, y);
        if (o != 0 && o != partner && s.rho(x, y) <= grow) return false;
      }
    }
    return true;
  }

  void add(const Shape& s) {
    shapes_.push_back(s);
    const Label id = static_cast<Label>(shapes_.size());
    const Box bb = box_of(s, canvas_);
    for (int y = bb.y0; y <= bb.y1; ++y) {
      for (int x = bb.x0; x <= bb.x1; ++x) {
        const double r = s.rho(x, y);
        if (r <= 1.0 && r < rho_(x, y)) {
          rho_(x, y) = r;
          owner_(x, y) = id;
        }
      }
    }
  }

  // One connected piece per instance, small leftovers dropped, labels contiguous.
  LabelMap labels(double min_keep) const {
    LabelMap out(canvas_);
    for (Label id = 1; id <= shapes_.size(); ++id) {
      const auto cc = morph::connected_components(mask_of(owner_, id));
      const auto area = morph::areas(cc);
      std::size_t best = 0;
      for (std::size_t k = 1; k < area.size(); ++k) {
        if (best == 0 || area[k] > area[best]) best = k;
      }
      if (best == 0 || static_cast<double>(area[best]) < min_keep) continue;
      for (std::size_t i = 0; i < out.pixel_count(); ++i) {
        if (cc[i] == best) out[i] = id;
      }
    }
    return morph::compact(out);
  }

  const LabelMap& owner() const { return owner_; }

 private:
  Size canvas_;
  LabelMap owner_;
  Raster<double> rho_;
  std::vector<Shape> shapes_;
};

// Places `count` shapes from `make`; a touching shape is pushed against an existing one.
template <class Make>
void place(Layout& layout, Rng& rng, int count, double touching_prob, Make make) {
  const Size canvas = layout.canvas();
  for (int k = 0; k < count; ++k) {
    const bool touch = !layout.shapes().empty() && uniform(rng, 0.0, 1.0) < touching_prob;
    for (int attempt = 0; attempt < kPlacementTries; ++attempt) {
      Shape s = make(rng);
      Label partner = 0;
      if (touch) {
        partner = static_cast<Label>(uniform_int(rng, 1, static_cast<int>(layout.shapes().size())));
        const Shape& p = layout.shapes()[partner - 1];
        const double psi = uniform(rng, 0.0, 2.0 * kPi);
        s.cx = p.cx;
        s.cy = p.cy;
        const double d = 0.85 * (p.reach(psi) + s.reach(psi + kPi));
        s.cx = p.cx + d * std::cos(psi);
        s.cy = p.cy + d * std::sin(psi);
      } else {
        const double m = s.bound() + 1.0;
        if (2 * m >= canvas.width - 1 || 2 * m >= canvas.height - 1) continue;
        s.cx = uniform(rng, m, canvas.width - 1 - m);
        s.cy = uniform(rng, m, canvas.height - 1 - m);
      }
      if (!fits(s, canvas) || !layout.clear(s, touch ? 0.0 : 2.0, partner)) continue;
      layout.add(s);
      break;
    }
  }
}

Color jitter(const Color& base, double amount, Rng& rng) {
  Color c = base;
  for (auto& v : c) v = std::clamp(v + uniform(rng, -amount, amount), 0.0, 1.0);
  return c;
}

// Smooth value noise (bilinear over a coarse lattice) plus per-pixel Gaussian grain.
class Canvas {
 public:
  Canvas(Size size, const Color& base, double noise, Rng& rng) : size_(size), px_(size.width * size.height) {
    const int cell = 12;
    const int gw = size.width / cell + 2;
    const int gh = size.height / cell + 2;
    std::normal_distribution<double> n01(0.0, 1.0);
    std::vector<double> lattice(static_cast<std::size_t>(gw * gh));
    for (auto& v : lattice) v = n01(rng);
    for (int y = 0; y < size.height; ++y) {
      for (int x = 0; x < size.width; ++x) {
        const double fx = static_cast<double>(x) / cell;
        const double fy = static_cast<double>(y) / cell;
        const int ix = static_cast<int>(fx);
        const int iy = static_cast<int>(fy);
        const double tx = fx - ix;
        const double ty = fy - iy;
        auto L = [&](int i, int j) { return lattice[static_cast<std::size_t>(j * gw + i)]; };
        const double smooth = (1 - ty) * ((1 - tx) * L(ix, iy) + tx * L(ix + 1, iy)) +
                              ty * ((1 - tx) * L(ix, iy + 1) + tx * L(ix + 1, iy + 1));
        auto& p = at(x, y);
        for (int c = 0; c < 3; ++c) p[c] = base[c] + noise * (1.5 * smooth + n01(rng));
      }
    }
  }

  Color& at(int x, int y) { return px_[static_cast<std::size_t>(y * size_.width + x)]; }

  void blend(int x, int y, const Color& c, double alpha) {
    auto& p = at(x, y);
    for (int k = 0; k < 3; ++k) p[k] = (1.0 - alpha) * p[k] + alpha * c[k];
  }

  RgbImage image() const {
    RgbImage out(size_);
    for (std::size_t i = 0; i < px_.size(); ++i) {
      auto q = [&](double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); };
      out[i] = {q(px_[i][0]), q(px_[i][1]), q(px_[i][2])};
    }
    return out;
  }

 private:
  Size size_;
  std::vector<Color> px_;
};

int object_count(const SynthConfig& c, Rng& rng) { return uniform_int(rng, c.min_objects, c.max_objects); }

const Color kStroma{0.92, 0.78, 0.86};
const Color kHematoxylin{0.36, 0.22, 0.52};
const Color kCytoplasm{0.80, 0.58, 0.76};
const Color kEpithelium{0.62, 0.36, 0.64};
const Color kLumen{0.98, 0.96, 0.98};

}  // namespace

Sample gen_nuclei(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const int count = object_count(config, rng);
  Layout layout(config.canvas);
  place(layout, rng, count, config.touching_prob,
        [&](Rng& r) { return random_ellipse(r, uniform(r, config.min_size, config.max_size)); });
  Sample out;
  out.labels = layout.labels(std::max(1.0, 0.4 * config.min_size));

  Canvas canvas(config.canvas, kStroma, config.noise, rng);
  std::normal_distribution<double> grain(0.0, 1.0);
  const auto& shapes = layout.shapes();
  std::vector<Color> colors;
  for (std::size_t k = 0; k < shapes.size(); ++k) colors.push_back(jitter(kHematoxylin, 0.07, rng));
  for (int y = 0; y < config.canvas.height; ++y) {
    for (int x = 0; x < config.canvas.width; ++x) {
      const Label o = layout.owner()(x, y);
      if (o == 0) continue;
      const double rho = shapes[o - 1].rho(x, y);
      const double shade = 0.82 + 0.30 * rho * rho;  // darker core, lighter rim
      Color c = colors[o - 1];
      for (auto& v : c) v = v * shade + 0.5 * config.noise * grain(rng);
      canvas.blend(x, y, c, 1.0);
    }
  }
  out.image = canvas.image();
  return out;
}

Sample gen_cells(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const int count = object_count(config, rng);
  Layout layout(config.canvas);
  place(layout, rng, count, config.touching_prob,
        [&](Rng& r) { return random_ellipse(r, uniform(r, config.min_size, config.max_size)); });
  Sample out;
  // Cells keep their full geometric footprint; the feathered look never changes labels.
  out.labels = layout.labels(1.0);

  Canvas canvas(config.canvas, kStroma, config.noise, rng);
  for (std::size_t idx = 0; idx < layout.shapes().size(); ++idx) {
    const Shape& s = layout.shapes()[idx];
    const Color cyto = jitter(kCytoplasm, 0.05, rng);
    const Color nuc = jitter(kHematoxylin, 0.05, rng);
    Shape nucleus = s;
    nucleus.a *= uniform(rng, 0.40, 0.55);
    nucleus.b *= uniform(rng, 0.40, 0.55);
    const double off = uniform(rng, 0.0, 0.3 * std::min(s.a, s.b));
    const double dir = uniform(rng, 0.0, 2.0 * kPi);
    nucleus.cx += off * std::cos(dir);
    nucleus.cy += off * std::sin(dir);
    const double radius = 0.5 * (s.a + s.b);
    const Box bb = box_of(s, config.canvas, config.feather + 1.0);
    for (int y = bb.y0; y <= bb.y1; ++y) {
      for (int x = bb.x0; x <= bb.x1; ++x) {
        const Label o = layout.owner()(x, y);
        const double inside = (1.0 - s.rho(x, y)) * radius;  // approximate signed distance
        double alpha = 0.0;
        if (config.feather > 0.0) {
          alpha = std::clamp(0.5 + inside / config.feather, 0.0, 1.0);
        } else {
          alpha = inside >= 0.0 ? 1.0 : 0.0;
        }
        // Never paint over a neighbour's footprint.
        if (o != 0 && o != idx + 1) continue;
        if (alpha <= 0.0) continue;
        const double nrho = nucleus.rho(x, y);
        Color c = cyto;
        if (nrho <= 1.0) {
          for (int k = 0; k < 3; ++k) c[k] = nuc[k] * (0.85 + 0.2 * nrho);
        }
        canvas.blend(x, y, c, alpha);
      }
    }
  }
  out.image = canvas.image();
  return out;
}

Sample gen_glands(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const int count = object_count(config, rng);
  const Size size = config.canvas;

  struct Gland {
    Shape outer;
    double lumen_ratio;
    bool lumen_labelled;
  };
  std::vector<Gland> glands;
  LabelMap labels(size);
  Raster<std::uint8_t> lumen_px(size);

  for (int k = 0; k < count; ++k) {
    for (int attempt = 0; attempt < kPlacementTries; ++attempt) {
      Gland g;
      const double target = uniform(rng, config.min_size, config.max_size);
      g.outer = random_ellipse(rng, target);
      for (int h = 2; h <= 4; ++h) g.outer.harmonics.push_back({double(h), uniform(rng, 0.0, 0.06), uniform(rng, 0.0, 2 * kPi)});
      g.lumen_ratio = config.lumen ? uniform(rng, 0.35, 0.5) : 0.0;
      g.lumen_labelled = config.lumen && uniform(rng, 0.0, 1.0) < config.lumen_in_label_prob;
      const double m = g.outer.bound() * 1.6 + 2.0;
      if (2 * m >= size.width - 1 || 2 * m >= size.height - 1) continue;
      g.outer.cx = uniform(rng, m, size.width - 1 - m);
      g.outer.cy = uniform(rng, m, size.height - 1 - m);

      // Rescale until the labelled area is the target area; the shape is centred on
      // the canvas grid, so a few fixed-point steps converge.
      auto rasterize = [&](const Shape& s, LabelMap* into, Label id) {
        std::size_t area = 0;
        const Box bb = box_of(s, size);
        for (int y = bb.y0; y <= bb.y1; ++y) {
          for (int x = bb.x0; x <= bb.x1; ++x) {
            const double r = s.rho(x, y);
            if (r > 1.0) continue;
            const bool in_lumen = r < g.lumen_ratio;
            if (in_lumen && !g.lumen_labelled) {
              if (into) lumen_px(x, y) = 1;
              continue;
            }
            ++area;
            if (into) (*into)(x, y) = id;
          }
        }
        return area;
      };
      for (int it = 0; it < 4; ++it) {
        const auto a = static_cast<double>(rasterize(g.outer, nullptr, 0));
        if (a <= 0) break;
        const double f = std::sqrt(target / a);
        g.outer.a *= f;
        g.outer.b *= f;
      }
      const auto area = static_cast<double>(rasterize(g.outer, nullptr, 0));
      if (area < config.min_size || area > config.max_size || !fits(g.outer, size)) continue;
      bool overlap = false;
      const Box bb = box_of(g.outer, size, 3.0);
      const double grow = 1.0 + 3.0 / std::min(g.outer.a, g.outer.b);
      for (int y = bb.y0; y <= bb.y1 && !overlap; ++y) {
        for (int x = bb.x0; x <= bb.x1 && !overlap; ++x) {
          if ((labels(x, y) != 0 || lumen_px(x, y)) && g.outer.rho(x, y) <= grow) overlap = true;
        }
      }
      if (overlap) continue;
      glands.push_back(g);
      rasterize(g.outer, &labels, static_cast<Label>(glands.size()));
      break;
    }
  }

  Canvas canvas(size, kStroma, config.noise, rng);
  std::normal_distribution<double> grain(0.0, 1.0);
  for (const auto& g : glands) {
    const Color epi = jitter(kEpithelium, 0.05, rng);
    const Box bb = box_of(g.outer, size);
    for (int y = bb.y0; y <= bb.y1; ++y) {
      for (int x = bb.x0; x <= bb.x1; ++x) {
        const double r = g.outer.rho(x, y);
        if (r > 1.0) continue;
        Color c = r < g.lumen_ratio ? kLumen : epi;
        if (r >= g.lumen_ratio) {
          // Darker band of nuclei along the basal side of the epithelium.
          const double basal = std::clamp((r - g.lumen_ratio) / (1.0 - g.lumen_ratio), 0.0, 1.0);
          for (auto& v : c) v *= 1.0 - 0.25 * basal;
        }
        for (auto& v : c) v += 0.5 * config.noise * grain(rng);
        canvas.blend(x, y, c, 1.0);
      }
    }
  }
  return {canvas.image(), morph::compact(labels)};
}

Sample generate(const SynthConfig& config) {
  switch (config.kind) {
    case ObjectKind::Nucleus: return gen_nuclei(config);
    case ObjectKind::Cell: return gen_cells(config);
    case ObjectKind::Gland: return gen_glands(config);
  }
  return gen_nuclei(config);
}

namespace {

template <class T>
Raster<T> flip(const Raster<T>& in, bool horizontal) {
  Raster<T> out(in.size());
  for (int y = 0; y < in.height(); ++y) {
    for (int x = 0; x < in.width(); ++x) {
      out(x, y) = horizontal ? in(in.width() - 1 - x, y) : in(x, in.height() - 1 - y);
    }
  }
  return out;
}

}  // namespace

RgbImage flip_horizontal(const RgbImage& image) { return flip(image, true); }
LabelMap flip_horizontal(const LabelMap& labels) { return flip(labels, true); }
RgbImage flip_vertical(const RgbImage& image) { return flip(image, false); }
LabelMap flip_vertical(const LabelMap& labels) { return flip(labels, false); }

RgbImage photometric(const RgbImage& image, double brightness, double contrast, double noise_sigma, Rng& rng) {
  if (brightness == 0.0 && contrast == 1.0 && noise_sigma == 0.0) return image;
  std::array<double, 3> mean{0, 0, 0};
  for (const auto& p : image) {
    mean[0] += p.r;
    mean[1] += p.g;
    mean[2] += p.b;
  }
  for (auto& m : mean) m /= std::max<std::size_t>(1, image.pixel_count());
  std::normal_distribution<double> n01(0.0, 1.0);
  RgbImage out(image.size());
  for (std::size_t i = 0; i < image.pixel_count(); ++i) {
    const std::array<double, 3> v{double(image[i].r), double(image[i].g), double(image[i].b)};
    std::array<std::uint8_t, 3> q{};
    for (int c = 0; c < 3; ++c) {
      double x = (v[c] - mean[c]) * contrast + mean[c] + 255.0 * brightness;
      if (noise_sigma > 0.0) x += 255.0 * noise_sigma * n01(rng);
      q[c] = static_cast<std::uint8_t>(std::lround(std::clamp(x, 0.0, 255.0)));
    }
    out[i] = {q[0], q[1], q[2]};
  }
  return out;
}

Sample augment(const RgbImage& image, const LabelMap& labels, Rng& rng, const AugmentOptions& options) {
  require_same_size(image, labels, "augment");
  Sample s{image, labels};
  if (uniform(rng, 0.0, 1.0) < options.flip_prob) {
    s.image = flip_horizontal(s.image);
    s.labels = flip_horizontal(s.labels);
  }
  if (uniform(rng, 0.0, 1.0) < options.flip_prob) {
    s.image = flip_vertical(s.image);
    s.labels = flip_vertical(s.labels);
  }
  const double b = options.brightness > 0 ? uniform(rng, -options.brightness, options.brightness) : 0.0;
  const double c = options.contrast > 0 ? uniform(rng, 1.0 - options.contrast, 1.0 + options.contrast) : 1.0;
  s.image = photometric(s.image, b, c, options.noise_sigma, rng);
  return s;
}

namespace {

std::string image_name(int i) {
  std::ostringstream os;
  os << std::setw(4) << std::setfill('0') << i;
  return os.str();
}

}  // namespace

void write_dataset(const std::filesystem::path& root, const SynthConfig& config, int count) {
  config.validate();
  if (count < 0) throw InvalidConfig("synth: negative image count");
  std::filesystem::create_directories(root / "images");
  std::filesystem::create_directories(root / "labels");
  nlohmann::json manifest;
  manifest["config"] = to_json(config);
  manifest["images"] = nlohmann::json::array();
  for (int i = 0; i < count; ++i) {
    SynthConfig c = config;
    c.seed = config.seed + static_cast<std::uint64_t>(i);
    const Sample s = generate(c);
    const std::string name = image_name(i);
    png::write_rgb(root / "images" / (name + ".png"), s.image);
    png::write_labels(root / "labels" / (name + ".png"), s.labels);
    manifest["images"].push_back({{"name", name}, {"seed", c.seed}, {"instances", max_label(s.labels)}});
  }
  std::ofstream out(root / "manifest.json");
  if (!out) throw IoError("cannot write manifest in " + root.string());
  out << manifest.dump(2) << '\n';
}

Dataset load_dataset(const std::filesystem::path& root, bool require_labels) {
  const auto images = root / "images";
  if (!std::filesystem::is_directory(images)) throw IoError("dataset has no images/ directory: " + root.string());
  Dataset d;
  d.root = root;
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(images)) {
    if (e.path().extension() == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    Sample s;
    s.image = png::read_rgb(f);
    const auto label_path = root / "labels" / f.filename();
    if (std::filesystem::exists(label_path)) {
      s.labels = png::read_labels(label_path);
      require_same_size(s.image, s.labels, "dataset");
    } else if (require_labels) {
      throw IoError("missing labels for " + f.filename().string());
    }
    d.names.push_back(f.stem().string());
    d.samples.push_back(std::move(s));
  }
  return d;
}

}  // namespace nuclick::synth

#include "nuclick/png_io.hpp"

#include <png.h>

#include <cstring>
#include <fstream>
#include <iterator>

namespace nuclick::png {

namespace {

struct WriteState {
  Bytes* out;
};

void write_cb(png_structp png, png_bytep data, png_size_t len) {
  auto* s = static_cast<WriteState*>(png_get_io_ptr(png));
  s->out->insert(s->out->end(), data, data + len);
}

void flush_cb(png_structp) {}

struct ReadState {
  const Bytes* in;
  std::size_t pos;
};

void read_cb(png_structp png, png_bytep data, png_size_t len) {
  auto* s = static_cast<ReadState*>(png_get_io_ptr(png));
  if (s->pos + len > s->in->size()) png_error(png, "truncated PNG");
  std::memcpy(data, s->in->data() + s->pos, len);
  s->pos += len;
}

[[noreturn]] void error_cb(png_structp, png_const_charp msg) { throw InvalidInput(std::string("PNG: ") + msg); }
void warning_cb(png_structp, png_const_charp) {}

// rows: height rows of `row_bytes` each.
Bytes encode(int width, int height, int bit_depth, int color_type, const std::vector<std::uint8_t>& rows) {
  if (width <= 0 || height <= 0) throw InvalidInput("PNG: cannot encode an empty raster");
  Bytes out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, error_cb, warning_cb);
  png_infop info = png_create_info_struct(png);
  WriteState state{&out};
  try {
    png_set_write_fn(png, &state, write_cb, flush_cb);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 6);
    png_write_info(png, info);
    const std::size_t row_bytes = rows.size() / static_cast<std::size_t>(height);
    for (int y = 0; y < height; ++y) {
      png_write_row(png, const_cast<png_bytep>(rows.data() + static_cast<std::size_t>(y) * row_bytes));
    }
    png_write_end(png, nullptr);
  } catch (...) {
    png_destroy_write_struct(&png, &info);
    throw;
  }
  png_destroy_write_struct(&png, &info);
  return out;
}

struct Decoded {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 8;
  std::vector<std::uint8_t> pixels;
};

Decoded decode(const Bytes& bytes, bool keep_16bit_gray) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw InvalidInput("PNG: bad signature");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, error_cb, warning_cb);
  png_infop info = png_create_info_struct(png);
  ReadState state{&bytes, 0};
  Decoded d;
  try {
    png_set_read_fn(png, &state, read_cb);
    png_read_info(png, info);
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    const bool gray = color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA;
    if (depth == 16 && !(keep_16bit_gray && gray)) png_set_strip_16(png);
    if (depth == 16 && keep_16bit_gray && gray) png_set_swap(png);  // host (little-endian) order
    png_read_update_info(png, info);
    d.width = static_cast<int>(png_get_image_width(png, info));
    d.height = static_cast<int>(png_get_image_height(png, info));
    d.channels = png_get_channels(png, info);
    d.bit_depth = png_get_bit_depth(png, info);
    const std::size_t row_bytes = png_get_rowbytes(png, info);
    d.pixels.resize(row_bytes * static_cast<std::size_t>(d.height));
    for (int y = 0; y < d.height; ++y) png_read_row(png, d.pixels.data() + static_cast<std::size_t>(y) * row_bytes, nullptr);
    png_read_end(png, nullptr);
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return d;
}

}  // namespace

Bytes encode_rgb(const RgbImage& image) {
  std::vector<std::uint8_t> rows;
  rows.reserve(image.pixel_count() * 3);
  for (const auto& p : image) {
    rows.push_back(p.r);
    rows.push_back(p.g);
    rows.push_back(p.b);
  }
  return encode(image.width(), image.height(), 8, PNG_COLOR_TYPE_RGB, rows);
}

Bytes encode_mask(const BinaryMask& mask) {
  std::vector<std::uint8_t> rows(mask.pixel_count());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = mask[i] ? 255 : 0;
  return encode(mask.width(), mask.height(), 8, PNG_COLOR_TYPE_GRAY, rows);
}

Bytes encode_labels(const LabelMap& labels) {
  std::vector<std::uint8_t> rows(labels.pixel_count() * 2);
  for (std::size_t i = 0; i < labels.pixel_count(); ++i) {
    if (labels[i] > 0xFFFF) throw InvalidInput("PNG: label exceeds 16 bits");
    rows[2 * i] = static_cast<std::uint8_t>(labels[i] >> 8);  // PNG is big-endian
    rows[2 * i + 1] = static_cast<std::uint8_t>(labels[i] & 0xFF);
  }
  return encode(labels.width(), labels.height(), 16, PNG_COLOR_TYPE_GRAY, rows);
}

RgbImage decode_rgb(const Bytes& bytes) {
  const Decoded d = decode(bytes, false);
  RgbImage out(d.width, d.height);
  for (std::size_t i = 0; i < out.pixel_count(); ++i) {
    const std::uint8_t* p = d.pixels.data() + i * static_cast<std::size_t>(d.channels);
    out[i] = d.channels >= 3 ? Rgb{p[0], p[1], p[2]} : Rgb{p[0], p[0], p[0]};
  }
  return out;
}

BinaryMask decode_mask(const Bytes& bytes) {
  const Decoded d = decode(bytes, false);
  if (d.channels != 1) throw InvalidInput("PNG: mask must be grayscale");
  BinaryMask out(d.width, d.height);
  for (std::size_t i = 0; i < out.pixel_count(); ++i) out[i] = d.pixels[i] ? 1 : 0;
  return out;
}

LabelMap decode_labels(const Bytes& bytes) {
  const Decoded d = decode(bytes, true);
  if (d.channels != 1) throw InvalidInput("PNG: label map must be grayscale");
  LabelMap out(d.width, d.height);
  for (std::size_t i = 0; i < out.pixel_count(); ++i) {
    if (d.bit_depth == 16) {
      std::uint16_t v = 0;
      std::memcpy(&v, d.pixels.data() + 2 * i, 2);
      out[i] = v;
    } else {
      out[i] = d.pixels[i];
    }
  }
  return out;
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const Bytes& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace nuclick::png

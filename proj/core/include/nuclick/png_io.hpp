#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "nuclick/raster.hpp"

/// PNG encode/decode. Binary masks are 8-bit gray (0/255), label maps 16-bit gray,
/// images 8-bit RGB. Encoding is deterministic for identical rasters.
namespace nuclick::png {

using Bytes = std::vector<std::uint8_t>;

Bytes encode_rgb(const RgbImage& image);
Bytes encode_mask(const BinaryMask& mask);
Bytes encode_labels(const LabelMap& labels);

/// Any PNG colour type is converted to 8-bit RGB (alpha dropped).
RgbImage decode_rgb(const Bytes& bytes);
/// Nonzero gray becomes 1.
BinaryMask decode_mask(const Bytes& bytes);
/// 8- or 16-bit gray.
LabelMap decode_labels(const Bytes& bytes);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const Bytes& bytes);

inline RgbImage read_rgb(const std::filesystem::path& p) { return decode_rgb(read_file(p)); }
inline LabelMap read_labels(const std::filesystem::path& p) { return decode_labels(read_file(p)); }
inline BinaryMask read_mask(const std::filesystem::path& p) { return decode_mask(read_file(p)); }
inline void write_rgb(const std::filesystem::path& p, const RgbImage& im) { write_file(p, encode_rgb(im)); }
inline void write_labels(const std::filesystem::path& p, const LabelMap& l) { write_file(p, encode_labels(l)); }
inline void write_mask(const std::filesystem::path& p, const BinaryMask& m) { write_file(p, encode_mask(m)); }

}  // namespace nuclick::png

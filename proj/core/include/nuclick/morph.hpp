#pragma once

#include <cstdint>
#include <vector>

#include "nuclick/raster.hpp"

/// Pixel-exact binary morphology. Connectivity is 8 for foreground and 4 for
/// background throughout, and pixels outside the raster count as background.
namespace nuclick::morph {

/// Exact Euclidean distance from every foreground pixel to the nearest
/// background pixel (0 on background). Throws InvalidInput on a zero-sized raster.
DistanceMap edt(const BinaryMask& mask);

/// Squared distance to the nearest pixel set in `targets`, without treating the
/// outside of the raster as a target. Pixels are -1 when `targets` is empty.
Raster<std::int64_t> squared_distance_to(const BinaryMask& targets);

/// Topology-preserving thinning to an 8-connected, 1-pixel-wide skeleton.
BinaryMask skeletonize(const BinaryMask& mask);

/// Whether removing `p` from the foreground leaves the topology intact.
bool is_simple_point(const BinaryMask& mask, int x, int y);

/// Union of the 8-connected components of `mask` that intersect `marker`.
BinaryMask reconstruct(const BinaryMask& marker, const BinaryMask& mask);

/// 8-connected labeling; labels follow the raster order of each component's first pixel.
LabelMap connected_components(const BinaryMask& mask);

/// Zero every component with area < min_area and renumber survivors 1..K in order.
LabelMap remove_small(const LabelMap& labels, std::size_t min_area);

/// Renumber labels to 1..K keeping their relative order.
LabelMap compact(const LabelMap& labels);

/// Mean member coordinate rounded to the nearest pixel, snapped to the
/// deepest member pixel (max edt) when the rounded point is not a member.
Point centroid(const LabelMap& labels, Label id);

/// Uniform pixel among {edt >= margin}; falls back to the max-edt pixel.
Point sample_interior_point(const BinaryMask& mask, double margin, Rng& rng);

std::vector<std::size_t> areas(const LabelMap& labels);

/// Number of 8-connected foreground components.
int component_count(const BinaryMask& mask);

/// Number of 4-connected background components enclosed by foreground.
int hole_count(const BinaryMask& mask);

/// Pixel with maximal edt (first in raster order on ties).
Point deepest_point(const BinaryMask& mask);

/// Foreground pixels 8-adjacent to background (or to the raster edge).
BinaryMask boundary(const BinaryMask& mask);

BinaryMask dilate(const BinaryMask& mask);

}  // namespace nuclick::morph

#pragma once

#include "gsfield/core/image.hpp"
#include "gsfield/core/types.hpp"

namespace gsf {

/// Dimensionality of compute_descriptor's output: an 8x8 grid of mean
/// luminances plus a 16-bin histogram per color channel.
constexpr int kDescriptorLength = 8 * 8 + 3 * 16;

/// Deterministic global appearance descriptor, L2-normalized. Identical
/// frames map to identical vectors; only the cosine-similarity ranking over
/// it is consumed downstream.
VecX compute_descriptor(const ImageRGB& rgb);

double cosine_similarity(const VecX& a, const VecX& b);

}  // namespace gsf

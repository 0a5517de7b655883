#ifndef PBES_AUGMENTATION_HPP
#define PBES_AUGMENTATION_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "pbes/rng.hpp"

namespace pbes {

/// Planar (channel, row, column) image. Values are held as double; the PBIM
/// file format stores float32.
struct ImageTensor {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;

  ImageTensor() = default;
  ImageTensor(std::size_t c, std::size_t h, std::size_t w, std::vector<double> v);

  double at(std::size_t c, std::size_t p, std::size_t q) const {
    return values[(c * height + p) * width + q];
  }
  double& at(std::size_t c, std::size_t p, std::size_t q) {
    return values[(c * height + p) * width + q];
  }
  bool operator==(const ImageTensor&) const = default;
};

/// Non-negative per-pixel importance weights.
struct SaliencyMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> weights;

  SaliencyMap() = default;
  SaliencyMap(std::size_t h, std::size_t w, std::vector<double> v);

  double at(std::size_t p, std::size_t q) const { return weights[p * width + q]; }
  bool operator==(const SaliencyMap&) const = default;
};

/// Axis-aligned rectangle, half-open extent [top, top+height) x [left, left+width).
struct Region {
  std::size_t top = 0;
  std::size_t left = 0;
  std::size_t height = 1;
  std::size_t width = 1;
  bool operator==(const Region&) const = default;
};

struct Mask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> bits;
  std::uint8_t at(std::size_t p, std::size_t q) const { return bits[p * width + q]; }
};

struct BalancePlan {
  int reference_class = 0;
  std::map<int, std::size_t> counts;
};

/// Extra sample counts that lift every class to the largest class size
/// (lowest class id wins ties).
BalancePlan balance_plan(const std::map<int, std::size_t>& class_sizes);

double importance_score(const SaliencyMap& s, const Region& region);
Mask binary_mask(const Region& region, std::size_t height, std::size_t width);
/// Zeroes the region in every channel; other pixels are copied unchanged.
ImageTensor selective_cut(const ImageTensor& x, const Region& region);

enum class RegionSearchMode { deterministic, randomized };

struct RegionSearch {
  RegionSearchMode mode = RegionSearchMode::deterministic;
  /// Quantile gate for randomized mode.
  double tau = 0.25;
};

/// Scans every rh×rw window at unit stride. Deterministic mode returns the
/// minimum-score window (first in raster order on ties). Randomized mode draws
/// uniformly among windows whose score is at most the lower tau-quantile
/// score, i.e. the sorted score at position floor(tau * (N-1)).
Region find_low_importance_region(const SaliencyMap& s, std::size_t rh, std::size_t rw,
                                  const RegionSearch& search, Rng& rng);

/// max(1, floor(extent / 4)).
std::size_t default_region_extent(std::size_t extent);

struct AugmentParams {
  /// 0 selects default_region_extent of the image dimension.
  std::size_t region_height = 0;
  std::size_t region_width = 0;
  RegionSearch search;
};

struct AugmentedImage {
  ImageTensor image;
  std::size_t source_index = 0;
  Region region;
};

/// Model-free saliency: per pixel, mean over channels of |x - class mean image|.
std::vector<SaliencyMap> fallback_saliency(std::span<const ImageTensor> images);

/// Generates `count` selective-cut images. Sources are visited round-robin in a
/// seeded shuffled order. When `saliencies` is empty the fallback saliency is
/// used; otherwise it must hold one map per image.
std::vector<AugmentedImage> augment_class(std::span<const ImageTensor> images,
                                          std::span<const SaliencyMap> saliencies,
                                          std::size_t count, const AugmentParams& params,
                                          Rng& rng);

}  // namespace pbes

#endif  // PBES_AUGMENTATION_HPP

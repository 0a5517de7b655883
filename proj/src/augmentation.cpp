#include "pbes/augmentation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pbes/errors.hpp"

namespace pbes {

ImageTensor::ImageTensor(std::size_t c, std::size_t h, std::size_t w, std::vector<double> v)
    : channels(c), height(h), width(w), values(std::move(v)) {
  if (c == 0 || h == 0 || w == 0) throw ValidationError("ImageTensor: dimensions must be positive");
  if (values.size() != c * h * w) throw ValidationError("ImageTensor: value count mismatch");
  for (double x : values) {
    if (!std::isfinite(x)) throw ValidationError("ImageTensor: non-finite pixel");
  }
}

SaliencyMap::SaliencyMap(std::size_t h, std::size_t w, std::vector<double> v)
    : height(h), width(w), weights(std::move(v)) {
  if (h == 0 || w == 0) throw ValidationError("SaliencyMap: dimensions must be positive");
  if (weights.size() != h * w) throw ValidationError("SaliencyMap: weight count mismatch");
  for (double x : weights) {
    if (!std::isfinite(x) || x < 0.0) throw ValidationError("SaliencyMap: weights must be finite and non-negative");
  }
}

namespace {

void check_region(const Region& r, std::size_t h, std::size_t w) {
  if (r.height == 0 || r.width == 0 || r.top + r.height > h || r.left + r.width > w) {
    throw ValidationError("region (" + std::to_string(r.top) + "," + std::to_string(r.left) + ") " +
                          std::to_string(r.height) + "x" + std::to_string(r.width) +
                          " does not fit in " + std::to_string(h) + "x" + std::to_string(w));
  }
}

}  // namespace

BalancePlan balance_plan(const std::map<int, std::size_t>& class_sizes) {
  if (class_sizes.empty()) throw ValidationError("balance_plan: no classes");
  BalancePlan plan;
  std::size_t largest = 0;
  bool first = true;
  for (const auto& [cls, size] : class_sizes) {
    if (size == 0) throw ValidationError("balance_plan: class " + std::to_string(cls) + " is empty");
    if (first || size > largest) {
      largest = size;
      plan.reference_class = cls;
      first = false;
    }
  }
  for (const auto& [cls, size] : class_sizes) plan.counts[cls] = largest - size;
  return plan;
}

double importance_score(const SaliencyMap& s, const Region& region) {
  check_region(region, s.height, s.width);
  double total = 0.0;
  for (std::size_t p = region.top; p < region.top + region.height; ++p) {
    for (std::size_t q = region.left; q < region.left + region.width; ++q) total += s.at(p, q);
  }
  return total;
}

Mask binary_mask(const Region& region, std::size_t height, std::size_t width) {
  check_region(region, height, width);
  Mask m{height, width, std::vector<std::uint8_t>(height * width, 0)};
  for (std::size_t p = region.top; p < region.top + region.height; ++p) {
    for (std::size_t q = region.left; q < region.left + region.width; ++q) m.bits[p * width + q] = 1;
  }
  return m;
}

ImageTensor selective_cut(const ImageTensor& x, const Region& region) {
  check_region(region, x.height, x.width);
  ImageTensor out = x;
  for (std::size_t c = 0; c < x.channels; ++c) {
    for (std::size_t p = region.top; p < region.top + region.height; ++p) {
      for (std::size_t q = region.left; q < region.left + region.width; ++q) out.at(c, p, q) = 0.0;
    }
  }
  return out;
}

Region find_low_importance_region(const SaliencyMap& s, std::size_t rh, std::size_t rw,
                                  const RegionSearch& search, Rng& rng) {
  if (rh == 0 || rw == 0 || rh > s.height || rw > s.width) {
    throw ValidationError("find_low_importance_region: window " + std::to_string(rh) + "x" +
                          std::to_string(rw) + " does not fit in " + std::to_string(s.height) +
                          "x" + std::to_string(s.width));
  }
  if (!(search.tau >= 0.0 && search.tau <= 1.0)) throw ValidationError("find_low_importance_region: tau must be in [0, 1]");

  std::vector<Region> windows;
  std::vector<double> scores;
  for (std::size_t top = 0; top + rh <= s.height; ++top) {
    for (std::size_t left = 0; left + rw <= s.width; ++left) {
      Region r{top, left, rh, rw};
      scores.push_back(importance_score(s, r));
      windows.push_back(r);
    }
  }

  if (search.mode == RegionSearchMode::deterministic) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
      if (scores[i] < scores[best]) best = i;
    }
    return windows[best];
  }

  std::vector<double> sorted = scores;
  std::sort(sorted.begin(), sorted.end());
  const auto pos = static_cast<std::size_t>(std::floor(search.tau * static_cast<double>(sorted.size() - 1)));
  const double gate = sorted[pos];
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] <= gate) eligible.push_back(i);
  }
  return windows[eligible[rng.uniform_index(eligible.size())]];
}

std::size_t default_region_extent(std::size_t extent) { return std::max<std::size_t>(1, extent / 4); }

std::vector<SaliencyMap> fallback_saliency(std::span<const ImageTensor> images) {
  if (images.empty()) return {};
  const auto& first = images.front();
  for (const auto& img : images) {
    if (img.channels != first.channels || img.height != first.height || img.width != first.width) {
      throw ValidationError("fallback_saliency: images in a class must share one shape");
    }
  }
  std::vector<double> mean(first.values.size(), 0.0);
  for (const auto& img : images) {
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += img.values[i];
  }
  for (double& v : mean) v /= static_cast<double>(images.size());

  std::vector<SaliencyMap> maps;
  maps.reserve(images.size());
  const std::size_t plane = first.height * first.width;
  for (const auto& img : images) {
    std::vector<double> w(plane, 0.0);
    for (std::size_t c = 0; c < img.channels; ++c) {
      for (std::size_t k = 0; k < plane; ++k) w[k] += std::fabs(img.values[c * plane + k] - mean[c * plane + k]);
    }
    for (double& v : w) v /= static_cast<double>(img.channels);
    maps.emplace_back(first.height, first.width, std::move(w));
  }
  return maps;
}

std::vector<AugmentedImage> augment_class(std::span<const ImageTensor> images,
                                          std::span<const SaliencyMap> saliencies,
                                          std::size_t count, const AugmentParams& params,
                                          Rng& rng) {
  if (count == 0) return {};
  if (images.empty()) throw ValidationError("augment_class: cannot augment an empty class");
  if (!saliencies.empty() && saliencies.size() != images.size()) {
    throw ValidationError("augment_class: need one saliency map per image");
  }
  std::vector<SaliencyMap> computed;
  if (saliencies.empty()) {
    computed = fallback_saliency(images);
    saliencies = computed;
  }
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (saliencies[i].height != images[i].height || saliencies[i].width != images[i].width) {
      throw ValidationError("augment_class: saliency map " + std::to_string(i) + " does not match its image");
    }
  }

  std::vector<std::size_t> order(images.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);

  std::vector<AugmentedImage> out;
  out.reserve(count);
  for (std::size_t t = 0; t < count; ++t) {
    const std::size_t src = order[t % order.size()];
    const auto& img = images[src];
    const std::size_t rh = params.region_height ? params.region_height : default_region_extent(img.height);
    const std::size_t rw = params.region_width ? params.region_width : default_region_extent(img.width);
    const Region region = find_low_importance_region(saliencies[src], rh, rw, params.search, rng);
    out.push_back({selective_cut(img, region), src, region});
  }
  return out;
}

}  // namespace pbes

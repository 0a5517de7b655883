#ifndef PBES_DATASET_HPP
#define PBES_DATASET_HPP

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pbes/augmentation.hpp"
#include "pbes/numerics.hpp"

namespace pbes {

enum class SplitTag { train, test };

/// Labeled feature vectors stored row-major. May be empty.
class LabeledDataset {
 public:
  LabeledDataset() = default;
  explicit LabeledDataset(std::size_t dims, SplitTag split = SplitTag::train) : dims_(dims), split_(split) {}

  std::size_t dims() const { return dims_; }
  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  SplitTag split() const { return split_; }

  std::span<const double> point(std::size_t i) const { return {values_.data() + i * dims_, dims_}; }
  int label(std::size_t i) const { return labels_[i]; }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<double>& values() const { return values_; }

  void add(std::span<const double> point, int label);
  void append(const LabeledDataset& other);

  std::map<int, std::size_t> class_counts() const;
  /// Row indices holding the given class, ascending.
  std::vector<std::size_t> indices_of(int cls) const;
  /// Rows of one class as a matrix; throws if the class is absent.
  DataMatrix class_matrix(int cls) const;
  DataMatrix as_matrix() const;

  bool operator==(const LabeledDataset&) const = default;

 private:
  std::size_t dims_ = 0;
  SplitTag split_ = SplitTag::train;
  std::vector<double> values_;
  std::vector<int> labels_;
};

/// Labeled images with optional per-image saliency maps (empty, or one per image).
struct ImageDataset {
  std::vector<ImageTensor> images;
  std::vector<int> labels;
  std::vector<SaliencyMap> saliencies;
  std::vector<std::string> names;
};

}  // namespace pbes

#endif  // PBES_DATASET_HPP

#ifndef PBES_IO_HPP
#define PBES_IO_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pbes/augmentation.hpp"
#include "pbes/dataset.hpp"
#include "pbes/harness.hpp"
#include "pbes/model.hpp"

namespace pbes::io {

using Bytes = std::vector<std::uint8_t>;

// PBIM: "PBIM", u32 c, h, w, then c*h*w float32, all little-endian, planar.
Bytes encode_image(const ImageTensor& image);
ImageTensor decode_image(std::span<const std::uint8_t> bytes);

// PBSM: "PBSM", u32 h, w, then h*w float32.
Bytes encode_saliency(const SaliencyMap& map);
SaliencyMap decode_saliency(std::span<const std::uint8_t> bytes);

// Model checkpoint: "PBMD", u32 version, u32 classes, u32 features,
// i64 class ids, f64 weights row-major, f64 bias.
inline constexpr std::uint32_t kCheckpointVersion = 1;
Bytes encode_model(const SoftmaxModel& model);
SoftmaxModel decode_model(std::span<const std::uint8_t> bytes);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Feature CSV with header `label,f0,...,f{d-1}`. Labels are non-negative
/// integer class ids.
LabeledDataset parse_feature_csv(const std::string& text, SplitTag split = SplitTag::train);
std::string format_feature_csv(const LabeledDataset& data);
LabeledDataset read_feature_csv(const std::filesystem::path& path, SplitTag split = SplitTag::train);

/// `task,accuracy,avg_accuracy,macro_f1,gmean,wall_ms`, six decimals.
std::string format_metrics_csv(std::span<const MetricsRow> rows);
/// Same columns prefixed by `budget`, rows ordered by (budget, task).
std::string format_sweep_csv(std::span<const SweepBlock> blocks);

/// Image directory layout: <root>/<class id>/<name>.pbim, optional
/// <name>.pbsm saliency next to each image. Classes ascend by id, files by name.
/// Saliencies are loaded only if every image has one.
ImageDataset read_image_dir(const std::filesystem::path& root);
/// Writes images (and saliencies if present) in the layout above.
void write_image_dir(const std::filesystem::path& root, const ImageDataset& data);

/// `class,channel,variance` rows followed by `average` rows, and `class,count`.
std::string format_variance_csv(const DatasetStats& stats);
std::string format_counts_csv(const DatasetStats& stats);

/// "%.6f" with the C locale.
std::string fixed6(double value);

}  // namespace pbes::io

#endif  // PBES_IO_HPP

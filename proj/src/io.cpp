#include "pbes/io.hpp"

#include <algorithm>
#include <bit>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "pbes/errors.hpp"

namespace pbes::io {

namespace {

void put_u32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(Bytes& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(Bytes& out, double v) { put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
void put_f64(Bytes& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, const char* what) : bytes_(bytes), what_(what) {}

  void magic(const char* tag) {
    need(4);
    if (std::memcmp(bytes_.data(), tag, 4) != 0) fail(std::string("bad magic, expected ") + tag);
    pos_ = 4;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f32() { return static_cast<double>(std::bit_cast<float>(u32())); }
  double f64() { return std::bit_cast<double>(u64()); }
  void finish() const {
    if (pos_ != bytes_.size()) fail("trailing bytes");
  }
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) fail("truncated");
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  [[noreturn]] void fail(const std::string& why) const { throw IoError(std::string(what_) + ": " + why); }

 private:
  std::span<const std::uint8_t> bytes_;
  const char* what_;
  std::size_t pos_ = 0;
};

}  // namespace

Bytes encode_image(const ImageTensor& image) {
  Bytes out{'P', 'B', 'I', 'M'};
  put_u32(out, static_cast<std::uint32_t>(image.channels));
  put_u32(out, static_cast<std::uint32_t>(image.height));
  put_u32(out, static_cast<std::uint32_t>(image.width));
  for (double v : image.values) put_f32(out, v);
  return out;
}

ImageTensor decode_image(std::span<const std::uint8_t> bytes) {
  Reader r(bytes, "PBIM");
  r.magic("PBIM");
  const std::uint64_t c = r.u32(), h = r.u32(), w = r.u32();
  if (c == 0 || h == 0 || w == 0) r.fail("zero dimension");
  if (r.remaining() != c * h * w * 4) r.fail("payload size does not match header");
  std::vector<double> values(c * h * w);
  for (double& v : values) v = r.f32();
  r.finish();
  try {
    return ImageTensor(c, h, w, std::move(values));
  } catch (const ValidationError& e) {
    r.fail(e.what());
  }
}

Bytes encode_saliency(const SaliencyMap& map) {
  Bytes out{'P', 'B', 'S', 'M'};
  put_u32(out, static_cast<std::uint32_t>(map.height));
  put_u32(out, static_cast<std::uint32_t>(map.width));
  for (double v : map.weights) put_f32(out, v);
  return out;
}

SaliencyMap decode_saliency(std::span<const std::uint8_t> bytes) {
  Reader r(bytes, "PBSM");
  r.magic("PBSM");
  const std::uint64_t h = r.u32(), w = r.u32();
  if (h == 0 || w == 0) r.fail("zero dimension");
  if (r.remaining() != h * w * 4) r.fail("payload size does not match header");
  std::vector<double> values(h * w);
  for (double& v : values) v = r.f32();
  r.finish();
  try {
    return SaliencyMap(h, w, std::move(values));
  } catch (const ValidationError& e) {
    r.fail(e.what());
  }
}

Bytes encode_model(const SoftmaxModel& model) {
  model.validate();
  Bytes out{'P', 'B', 'M', 'D'};
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(model.num_classes()));
  put_u32(out, static_cast<std::uint32_t>(model.num_features()));
  for (int id : model.class_ids) put_u64(out, static_cast<std::uint64_t>(static_cast<std::int64_t>(id)));
  for (double v : model.weights.values()) put_f64(out, v);
  for (double v : model.bias) put_f64(out, v);
  return out;
}

SoftmaxModel decode_model(std::span<const std::uint8_t> bytes) {
  Reader r(bytes, "PBMD");
  r.magic("PBMD");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) r.fail("unsupported checkpoint version " + std::to_string(version));
  const std::uint64_t k = r.u32(), d = r.u32();
  if (r.remaining() != k * 8 + k * d * 8 + k * 8) r.fail("payload size does not match header");
  SoftmaxModel m;
  for (std::uint64_t i = 0; i < k; ++i) m.class_ids.push_back(static_cast<int>(static_cast<std::int64_t>(r.u64())));
  std::vector<double> w(k * d);
  for (double& v : w) v = r.f64();
  m.weights = Matrix(k, d, std::move(w));
  for (std::uint64_t i = 0; i < k; ++i) m.bias.push_back(r.f64());
  r.finish();
  return m;
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return data;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

LabeledDataset parse_feature_csv(const std::string& text, SplitTag split) {
  std::vector<std::string_view> lines;
  std::string_view rest(text);
  while (!rest.empty()) {
    const std::size_t nl = rest.find('\n');
    std::string_view line = rest.substr(0, nl);
    if (!line.empty() && line.back() == '\r') throw IoError("feature CSV: CRLF line endings are not accepted");
    lines.push_back(line);
    if (nl == std::string_view::npos) break;
    rest.remove_prefix(nl + 1);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw IoError("feature CSV: missing header");

  const auto header = split_fields(lines.front());
  if (header.size() < 2 || header.front() != "label") throw IoError("feature CSV: header must be label,f0,...");
  for (std::size_t j = 1; j < header.size(); ++j) {
    if (header[j] != "f" + std::to_string(j - 1)) {
      throw IoError("feature CSV: header column " + std::to_string(j) + " must be f" + std::to_string(j - 1));
    }
  }
  const std::size_t d = header.size() - 1;
  LabeledDataset data(d, split);
  std::vector<double> point(d);
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto fields = split_fields(lines[li]);
    const std::string where = "feature CSV line " + std::to_string(li + 1) + ": ";
    if (fields.size() != d + 1) throw IoError(where + "expected " + std::to_string(d + 1) + " fields");
    int label = 0;
    const auto lf = fields[0];
    const auto [lp, lec] = std::from_chars(lf.data(), lf.data() + lf.size(), label);
    if (lec != std::errc() || lp != lf.data() + lf.size() || label < 0) {
      throw IoError(where + "label '" + std::string(lf) + "' is not a non-negative integer class id");
    }
    for (std::size_t j = 0; j < d; ++j) {
      const std::string field(fields[j + 1]);
      char* end = nullptr;
      errno = 0;
      const double v = std::strtod(field.c_str(), &end);
      if (field.empty() || end != field.c_str() + field.size() || !std::isfinite(v)) {
        throw IoError(where + "bad value '" + field + "'");
      }
      point[j] = v;
    }
    data.add(point, label);
  }
  return data;
}

std::string format_feature_csv(const LabeledDataset& data) {
  std::string out = "label";
  for (std::size_t j = 0; j < data.dims(); ++j) out += ",f" + std::to_string(j);
  out += '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    out += std::to_string(data.label(i));
    for (double v : data.point(i)) out += "," + format_g17(v);
    out += '\n';
  }
  return out;
}

LabeledDataset read_feature_csv(const std::filesystem::path& path, SplitTag split) {
  const auto bytes = read_file(path);
  return parse_feature_csv(std::string(bytes.begin(), bytes.end()), split);
}

std::string fixed6(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  return buf;
}

namespace {

std::string metrics_fields(const MetricsRow& r) {
  return std::to_string(r.task) + "," + fixed6(r.accuracy) + "," + fixed6(r.avg_accuracy) + "," +
         fixed6(r.macro_f1) + "," + fixed6(r.gmean) + "," + fixed6(r.wall_ms);
}

}  // namespace

std::string format_metrics_csv(std::span<const MetricsRow> rows) {
  std::string out = "task,accuracy,avg_accuracy,macro_f1,gmean,wall_ms\n";
  for (const auto& r : rows) out += metrics_fields(r) + "\n";
  return out;
}

std::string format_sweep_csv(std::span<const SweepBlock> blocks) {
  std::vector<const SweepBlock*> ordered;
  for (const auto& b : blocks) ordered.push_back(&b);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const SweepBlock* a, const SweepBlock* b) { return a->budget < b->budget; });
  std::string out = "budget,task,accuracy,avg_accuracy,macro_f1,gmean,wall_ms\n";
  for (const auto* b : ordered) {
    for (const auto& r : b->rows) out += std::to_string(b->budget) + "," + metrics_fields(r) + "\n";
  }
  return out;
}

ImageDataset read_image_dir(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw IoError("not a directory: " + root.string());

  std::vector<std::pair<int, fs::path>> class_dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    const std::string name = entry.path().filename().string();
    int cls = 0;
    const auto [p, e] = std::from_chars(name.data(), name.data() + name.size(), cls);
    if (e != std::errc() || p != name.data() + name.size() || cls < 0) {
      throw IoError("image directory: class folder '" + name + "' is not a non-negative integer id");
    }
    class_dirs.emplace_back(cls, entry.path());
  }
  std::sort(class_dirs.begin(), class_dirs.end());

  ImageDataset data;
  std::vector<std::optional<SaliencyMap>> maps;
  for (const auto& [cls, dir] : class_dirs) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".pbim") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      data.images.push_back(decode_image(read_file(f)));
      data.labels.push_back(cls);
      data.names.push_back(f.stem().string());
      auto sal = f;
      sal.replace_extension(".pbsm");
      if (fs::exists(sal)) {
        maps.emplace_back(decode_saliency(read_file(sal)));
      } else {
        maps.emplace_back();
      }
    }
  }
  if (!maps.empty() && std::all_of(maps.begin(), maps.end(), [](const auto& m) { return m.has_value(); })) {
    for (auto& m : maps) data.saliencies.push_back(std::move(*m));
  }
  return data;
}

void write_image_dir(const std::filesystem::path& root, const ImageDataset& data) {
  namespace fs = std::filesystem;
  if (data.images.size() != data.labels.size()) throw ValidationError("image directory: one label per image required");
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw IoError("cannot create " + root.string() + ": " + ec.message());
  for (std::size_t i = 0; i < data.images.size(); ++i) {
    const fs::path dir = root / std::to_string(data.labels[i]);
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    char fallback[32];
    std::snprintf(fallback, sizeof fallback, "%06zu", i);
    const std::string name = i < data.names.size() ? data.names[i] : fallback;
    write_file(dir / (name + ".pbim"), encode_image(data.images[i]));
    if (i < data.saliencies.size()) write_file(dir / (name + ".pbsm"), encode_saliency(data.saliencies[i]));
  }
}

std::string format_variance_csv(const DatasetStats& stats) {
  std::string out = "class,channel,variance\n";
  for (const auto& [cls, var] : stats.variance) {
    for (std::size_t c = 0; c < var.size(); ++c) out += std::to_string(cls) + "," + std::to_string(c) + "," + fixed6(var[c]) + "\n";
  }
  for (std::size_t c = 0; c < stats.average.size(); ++c) out += "average," + std::to_string(c) + "," + fixed6(stats.average[c]) + "\n";
  return out;
}

std::string format_counts_csv(const DatasetStats& stats) {
  std::string out = "class,count\n";
  for (const auto& [cls, n] : stats.counts) out += std::to_string(cls) + "," + std::to_string(n) + "\n";
  return out;
}

}  // namespace pbes::io

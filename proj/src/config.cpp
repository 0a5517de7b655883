#include "pbes/config.hpp"

#include <cstdio>
#include <set>
#include <sstream>

#include "pbes/errors.hpp"
#include "pbes/io.hpp"
#include "pbes/rng.hpp"

namespace pbes {

using nlohmann::json;

namespace {

// Type-checked conversions; nlohmann's get<> would coerce silently.
bool convert(const json& v, bool& out) {
  if (!v.is_boolean()) return false;
  out = v.get<bool>();
  return true;
}

bool convert(const json& v, std::string& out) {
  if (!v.is_string()) return false;
  out = v.get<std::string>();
  return true;
}

bool convert(const json& v, double& out) {
  if (!v.is_number()) return false;
  out = v.get<double>();
  return true;
}

bool convert(const json& v, std::uint64_t& out) {
  if (!v.is_number_unsigned()) return false;
  out = v.get<std::uint64_t>();
  return true;
}

bool convert(const json& v, std::vector<std::size_t>& out) {
  if (!v.is_array()) return false;
  out.clear();
  for (const auto& e : v) {
    std::uint64_t x = 0;
    if (!convert(e, x)) return false;
    out.push_back(static_cast<std::size_t>(x));
  }
  return true;
}

// Walks one JSON object, handing out typed fields and remembering which keys
// were consumed so the rest can be reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path, std::vector<std::string>& unknown)
      : obj_(obj), path_(std::move(path)), unknown_(unknown) {
    if (!obj_.is_object()) throw ValidationError("config: " + label() + " must be an object");
  }
  ~ObjectReader() = default;

  void finish() {
    for (const auto& [key, value] : obj_.items()) {
      if (!used_.count(key)) unknown_.push_back(path_.empty() ? key : path_ + "." + key);
    }
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return obj_.contains(key);
  }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return obj_.at(key);
  }

  std::string child_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    if (!convert(obj_.at(key), out)) throw ValidationError("config: " + child_path(key) + " has the wrong type");
  }

 private:
  std::string label() const { return path_.empty() ? "document" : path_; }

  const json& obj_;
  std::string path_;
  std::vector<std::string>& unknown_;
  std::set<std::string> used_;
};

SyntheticParams read_synthetic(const json& doc, const std::string& path, std::vector<std::string>& unknown) {
  SyntheticParams p;
  ObjectReader r(doc, path, unknown);
  r.get("classes", p.classes);
  r.get("tasks", p.tasks);
  r.get("dims", p.dims);
  r.get("max_class_size", p.max_class_size);
  r.get("imbalance_ratio", p.imbalance_ratio);
  r.get("class_sizes", p.class_sizes);
  r.get("sigma", p.sigma);
  r.get("radius", p.radius);
  r.get("outlier_fraction", p.outlier_fraction);
  r.get("outlier_multiplier", p.outlier_multiplier);
  r.finish();
  return p;
}

std::string resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? p : (base / path).string();
}

}  // namespace

SyntheticParams parse_synthetic(const json& doc) {
  std::vector<std::string> unknown;
  auto p = read_synthetic(doc, "", unknown);
  if (!unknown.empty()) throw ValidationError("config: unknown keys: " + unknown.front());
  return p;
}

CliConfig parse_cli_config(const json& doc, const std::filesystem::path& base_dir,
                           std::optional<std::uint64_t> seed_override) {
  std::vector<std::string> unknown;
  CliConfig out;
  ExperimentConfig& c = out.experiment;
  ObjectReader top(doc, "", unknown);

  std::optional<std::uint64_t> seed;
  if (top.has("seed")) {
    std::uint64_t s = 0;
    top.get("seed", s);
    seed = s;
  }
  if (seed_override) seed = seed_override;

  if (top.has("mode")) {
    std::string m;
    top.get("mode", m);
    c.mode = parse_baseline_mode(m);
  }
  top.get("memory_budget", c.memory_budget);
  if (c.mode == BaselineMode::finetune && !doc.contains("memory_budget")) c.memory_budget = 0;
  top.get("record_wall_time", c.record_wall_time);

  if (top.has("classifier")) {
    std::string m;
    top.get("classifier", m);
    if (m == "argmax") {
      c.classifier = ClassifierMode::argmax_logits;
    } else if (m == "ncm") {
      c.classifier = ClassifierMode::nearest_class_mean;
    } else {
      throw ValidationError("config: classifier must be argmax or ncm, got '" + m + "'");
    }
  }

  if (top.has("sampler")) {
    ObjectReader r(top.raw("sampler"), "sampler", unknown);
    if (r.has("method")) {
      std::string m;
      r.get("method", m);
      c.sampler.method = parse_sampler_method(m);
    }
    r.get("randp_directions", c.sampler.randp_pool);
    r.finish();
  }

  if (top.has("loss")) {
    ObjectReader r(top.raw("loss"), "loss", unknown);
    r.get("temperature", c.loss.temperature);
    r.get("beta", c.loss.beta);
    r.get("learning_rate", c.loss.learning_rate);
    r.get("epochs", c.loss.epochs);
    r.get("batch_size", c.loss.batch_size);
    r.get("ce_uses_temperature", c.loss.ce_uses_temperature);
    if (r.has("distill_scope")) {
      std::string s;
      r.get("distill_scope", s);
      if (s == "all") {
        c.loss.distill_scope = DistillScope::all;
      } else if (s == "exemplars") {
        c.loss.distill_scope = DistillScope::exemplars_only;
      } else {
        throw ValidationError("config: loss.distill_scope must be all or exemplars, got '" + s + "'");
      }
    }
    r.finish();
  }

  if (top.has("augmentation")) {
    ObjectReader r(top.raw("augmentation"), "augmentation", unknown);
    r.get("enabled", c.augmentation.enabled);
    if (r.has("search")) {
      std::string s;
      r.get("search", s);
      if (s == "deterministic") {
        c.augmentation.params.search.mode = RegionSearchMode::deterministic;
      } else if (s == "randomized") {
        c.augmentation.params.search.mode = RegionSearchMode::randomized;
      } else {
        throw ValidationError("config: augmentation.search must be deterministic or randomized, got '" + s + "'");
      }
    }
    r.get("tau", c.augmentation.params.search.tau);
    r.get("region_height", c.augmentation.params.region_height);
    r.get("region_width", c.augmentation.params.region_width);
    if (r.has("image_shape")) {
      std::vector<std::size_t> shape;
      r.get("image_shape", shape);
      if (shape.size() != 3) throw ValidationError("config: augmentation.image_shape must list c, h, w");
      c.augmentation.image_shape = {shape[0], shape[1], shape[2]};
    }
    r.finish();
  }

  if (top.has("stream")) {
    ObjectReader r(top.raw("stream"), "stream", unknown);
    if (r.has("synthetic")) c.stream.synthetic = read_synthetic(r.raw("synthetic"), "stream.synthetic", unknown);
    if (r.has("train_csv")) {
      r.get("train_csv", c.stream.train_csv);
      c.stream.train_csv = resolve(base_dir, c.stream.train_csv);
    }
    if (r.has("test_csv")) {
      r.get("test_csv", c.stream.test_csv);
      c.stream.test_csv = resolve(base_dir, c.stream.test_csv);
    }
    r.get("classes_per_task", c.stream.classes_per_task);
    r.finish();
    if (c.stream.synthetic && (!c.stream.train_csv.empty() || !c.stream.test_csv.empty())) {
      throw ValidationError("config: stream takes either synthetic or csv inputs, not both");
    }
  } else {
    c.stream.synthetic = SyntheticParams{};
  }

  if (top.has("output")) {
    std::string o;
    top.get("output", o);
    out.output = resolve(base_dir, o);
  }
  top.get("budgets", out.budgets);
  top.finish();

  if (!unknown.empty()) {
    std::string list;
    for (const auto& k : unknown) list += (list.empty() ? "" : ", ") + k;
    throw ValidationError("config: unknown keys: " + list);
  }
  if (!seed) throw ValidationError("config: seed is required (config key \"seed\" or --seed)");
  c.seed = *seed;
  c.validate();
  return out;
}

CliConfig load_cli_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override) {
  const auto bytes = io::read_file(path);
  json doc;
  try {
    doc = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw IoError("config " + path.string() + ": " + e.what());
  }
  return parse_cli_config(doc, path.parent_path(), seed_override);
}

json to_json(const SyntheticParams& p) {
  return json{{"classes", p.classes},
              {"tasks", p.tasks},
              {"dims", p.dims},
              {"max_class_size", p.max_class_size},
              {"imbalance_ratio", p.imbalance_ratio},
              {"class_sizes", p.class_sizes},
              {"sigma", p.sigma},
              {"radius", p.radius},
              {"outlier_fraction", p.outlier_fraction},
              {"outlier_multiplier", p.outlier_multiplier}};
}

json to_json(const ExperimentConfig& c) {
  json stream;
  if (c.stream.synthetic) {
    stream["synthetic"] = to_json(*c.stream.synthetic);
  } else {
    stream = {{"train_csv", c.stream.train_csv},
              {"test_csv", c.stream.test_csv},
              {"classes_per_task", c.stream.classes_per_task}};
  }
  const auto& a = c.augmentation;
  return json{
      {"seed", c.seed},
      {"mode", to_string(c.mode)},
      {"memory_budget", c.memory_budget},
      {"record_wall_time", c.record_wall_time},
      {"classifier", c.classifier == ClassifierMode::argmax_logits ? "argmax" : "ncm"},
      {"sampler", {{"method", to_string(c.sampler.method)}, {"randp_directions", c.sampler.randp_pool}}},
      {"loss",
       {{"temperature", c.loss.temperature},
        {"beta", c.loss.beta},
        {"learning_rate", c.loss.learning_rate},
        {"epochs", c.loss.epochs},
        {"batch_size", c.loss.batch_size},
        {"ce_uses_temperature", c.loss.ce_uses_temperature},
        {"distill_scope", c.loss.distill_scope == DistillScope::all ? "all" : "exemplars"}}},
      {"augmentation",
       {{"enabled", a.enabled},
        {"search", a.params.search.mode == RegionSearchMode::deterministic ? "deterministic" : "randomized"},
        {"tau", a.params.search.tau},
        {"region_height", a.params.region_height},
        {"region_width", a.params.region_width},
        {"image_shape", a.image_shape}}},
      {"stream", stream}};
}

std::string config_hash(const ExperimentConfig& config) {
  const std::string text = to_json(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json provenance(const ExperimentConfig& config) {
  const bool shared_t = config.loss.ce_uses_temperature;
  return json{
      {"tool_version", kToolVersion},
      {"config_hash", config_hash(config)},
      {"seed", config.seed},
      {"rng", std::string(Rng::kAlgorithm)},
      {"config", to_json(config)},
      {"decisions",
       {{"covariance_divisor", "n"},
        {"eigensolver", "cyclic-jacobi, off-diagonal < 1e-12 * trace"},
        {"direction_sign", "largest-magnitude component positive, earliest on ties"},
        {"rank_tolerance", kRankTolerance},
        {"rank_deficient_directions", "cycle informative directions; canonical axes at rank 0"},
        {"median_tie_break", "ascending row index"},
        {"projection", "raw points on fixed directions computed once per class"},
        {"herding", "no normalization, without replacement"},
        {"ce_temperature", shared_t ? "shared distillation temperature" : "T=1 over all current classes"},
        {"distillation_scope", config.loss.distill_scope == DistillScope::all ? "all training rows" : "exemplars only"},
        {"loss_reduction", "sum; step = learning_rate * gradient / rows"},
        {"new_class_init", "zero rows"},
        {"saliency_source", "fallback: channel-mean absolute deviation from class mean image"},
        {"region_default", "floor(extent / 4), minimum 1"},
        {"region_threshold", "lower tau-quantile gate; deterministic minimum by default"},
        {"memory_discard", "prefix truncation of ordered selections"},
        {"quota_remainder", "earliest-arrived classes"},
        {"exemplar_pool", "original data only; augmented rows train only"},
        {"split", "80/20 per class, seeded"}}}};
}

}  // namespace pbes

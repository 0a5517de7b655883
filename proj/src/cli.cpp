#include "pbes/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "pbes/config.hpp"
#include "pbes/errors.hpp"
#include "pbes/harness.hpp"
#include "pbes/io.hpp"
#include "pbes/sampling.hpp"

namespace pbes::cli {

namespace fs = std::filesystem;

namespace {

std::vector<std::size_t> parse_size_list(const std::string& text, const char* what) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      if (item.empty() || item[0] == '-') throw std::invalid_argument("");
      v = std::stoull(item, &pos);
    } catch (const std::exception&) {
      pos = std::string::npos;
    }
    if (pos != item.size()) throw ValidationError(std::string(what) + ": '" + item + "' is not a non-negative integer");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw ValidationError(std::string(what) + ": empty list");
  return out;
}

std::size_t worker_count() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("PBES_THREADS")) {
    const auto v = parse_size_list(env, "PBES_THREADS");
    if (v.size() != 1 || v[0] == 0) throw ValidationError("PBES_THREADS must be a positive integer");
    n = v[0];
  }
  return n;
}

void write_or_print(const std::optional<std::string>& path, const std::string& text, std::ostream& out) {
  if (path) {
    io::write_text(*path, text);
  } else {
    out << text;
  }
}

// ---- sample ---------------------------------------------------------------

struct SampleArgs {
  std::string input;
  std::string method;
  std::size_t m = 0;
  std::optional<std::uint64_t> seed;
  std::optional<int> cls;
  std::size_t randp_pool = 0;
  std::string out;
};

int cmd_sample(const SampleArgs& a, std::ostream& out) {
  const SamplerMethod method = parse_sampler_method(a.method);
  if ((method == SamplerMethod::random || method == SamplerMethod::randp) && !a.seed) {
    throw ValidationError("sample: --seed is required for method " + a.method);
  }

  LabeledDataset data;
  if (fs::is_directory(a.input)) {
    const auto images = io::read_image_dir(a.input);
    if (images.images.empty()) throw IoError("sample: no .pbim files under " + a.input);
    const std::size_t width = images.images.front().values.size();
    data = LabeledDataset(width);
    for (std::size_t i = 0; i < images.images.size(); ++i) {
      if (images.images[i].values.size() != width) throw ValidationError("sample: images differ in size");
      data.add(images.images[i].values, images.labels[i]);
    }
  } else {
    data = io::read_feature_csv(a.input);
  }

  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!a.cls || data.label(i) == *a.cls) rows.push_back(i);
  }
  if (rows.empty()) throw ValidationError("sample: no input rows" + (a.cls ? " for class " + std::to_string(*a.cls) : std::string()));
  const DataMatrix x = data.as_matrix().select(rows);

  Rng rng(a.seed.value_or(0));
  const auto sel = sample({method, a.randp_pool}, x, a.m, rng);

  std::string indices;
  LabeledDataset picked(data.dims());
  for (std::size_t k : sel.ordered_indices) {
    indices += std::to_string(rows[k]) + "\n";
    picked.add(data.point(rows[k]), data.label(rows[k]));
  }
  io::write_text(a.out, indices);
  io::write_text(a.out + ".rows.csv", io::format_feature_csv(picked));
  out << "selected " << sel.ordered_indices.size() << " of " << x.rows() << " rows with " << to_string(sel.method);
  if (sel.method == SamplerMethod::pbes || sel.method == SamplerMethod::randp) {
    out << " (appended " << sel.appended_count << ", directions " << to_string(*sel.direction_source) << ")";
  }
  out << "\n";
  return kOk;
}

// ---- run / sweep ------------------------------------------------------------

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<std::string> out;
  std::optional<std::string> save_model;
  std::optional<std::string> budgets;
};

CliConfig load_with_overrides(const RunArgs& a) {
  CliConfig cfg = load_cli_config(a.config, a.seed);
  if (a.mode) {
    cfg.experiment.mode = parse_baseline_mode(*a.mode);
    if (cfg.experiment.mode == BaselineMode::finetune) cfg.experiment.memory_budget = 0;
    cfg.experiment.validate();
  }
  if (a.out) cfg.output = *a.out;
  return cfg;
}

int cmd_run(const RunArgs& a, std::ostream& out) {
  const CliConfig cfg = load_with_overrides(a);
  SoftmaxModel model;
  const auto rows = run_experiment(cfg.experiment, load_stream(cfg.experiment), &model);
  write_or_print(cfg.output, io::format_metrics_csv(rows), out);
  if (cfg.output) io::write_text(*cfg.output + ".provenance.json", provenance(cfg.experiment).dump(2) + "\n");
  if (a.save_model) io::write_file(*a.save_model, io::encode_model(model));
  return kOk;
}

int cmd_sweep(const RunArgs& a, std::ostream& out, std::ostream& err) {
  const CliConfig cfg = load_with_overrides(a);
  std::vector<std::size_t> budgets = a.budgets ? parse_size_list(*a.budgets, "--budgets") : cfg.budgets;
  if (budgets.empty()) throw ValidationError("sweep: no budgets given (--budgets or config key \"budgets\")");
  std::vector<std::size_t> dropped;
  budgets = dedupe_budgets(budgets, &dropped);
  for (std::size_t b : dropped) err << "warning: duplicate budget " << b << " ignored\n";

  const auto blocks = run_sweep(cfg.experiment, load_stream(cfg.experiment), budgets, worker_count());
  write_or_print(cfg.output, io::format_sweep_csv(blocks), out);
  if (cfg.output) {
    auto prov = provenance(cfg.experiment);
    prov["budgets"] = budgets;
    io::write_text(*cfg.output + ".provenance.json", prov.dump(2) + "\n");
  }
  return kOk;
}

// ---- gen / stats / augment --------------------------------------------------

struct GenArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::string> image_shape;
};

ImageDataset to_images(const LabeledDataset& data, const std::array<std::size_t, 3>& shape) {
  ImageDataset images;
  for (std::size_t i = 0; i < data.size(); ++i) {
    images.images.push_back(row_to_image(data.point(i), shape));
    images.labels.push_back(data.label(i));
    char name[32];
    std::snprintf(name, sizeof name, "%06zu", i);
    images.names.emplace_back(name);
  }
  return images;
}

int cmd_gen(const GenArgs& a, std::ostream& out) {
  const CliConfig cfg = load_cli_config(a.config, a.seed);
  if (!cfg.experiment.stream.synthetic) throw ValidationError("gen: config stream must be synthetic");
  const TaskStream stream = generate_synthetic_stream(*cfg.experiment.stream.synthetic, cfg.experiment.seed);
  LabeledDataset train(stream.dims, SplitTag::train), test(stream.dims, SplitTag::test);
  for (const auto& t : stream.tasks) {
    train.append(t.train);
    test.append(t.test);
  }
  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec) throw IoError("cannot create " + a.out + ": " + ec.message());
  io::write_text(fs::path(a.out) / "train.csv", io::format_feature_csv(train));
  io::write_text(fs::path(a.out) / "test.csv", io::format_feature_csv(test));
  if (a.image_shape) {
    const auto s = parse_size_list(*a.image_shape, "--image-shape");
    if (s.size() != 3) throw ValidationError("--image-shape must be c,h,w");
    const std::array<std::size_t, 3> shape{s[0], s[1], s[2]};
    io::write_image_dir(fs::path(a.out) / "train_images", to_images(train, shape));
    io::write_image_dir(fs::path(a.out) / "test_images", to_images(test, shape));
  }
  out << "wrote " << train.size() << " train and " << test.size() << " test rows to " << a.out << "\n";
  return kOk;
}

int cmd_stats(const std::string& input, const std::string& out_dir, std::ostream& out) {
  const auto stats = dataset_stats(io::read_image_dir(input));
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
  io::write_text(fs::path(out_dir) / "variance.csv", io::format_variance_csv(stats));
  io::write_text(fs::path(out_dir) / "counts.csv", io::format_counts_csv(stats));
  out << "wrote statistics for " << stats.counts.size() << " classes to " << out_dir << "\n";
  return kOk;
}

struct AugmentArgs {
  std::string input;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string search = "deterministic";
  double tau = 0.25;
  std::size_t region_height = 0;
  std::size_t region_width = 0;
};

int cmd_augment(const AugmentArgs& a, std::ostream& out) {
  if (!a.seed) throw ValidationError("augment: --seed is required");
  AugmentParams params;
  params.region_height = a.region_height;
  params.region_width = a.region_width;
  params.search.tau = a.tau;
  if (a.search == "deterministic") {
    params.search.mode = RegionSearchMode::deterministic;
  } else if (a.search == "randomized") {
    params.search.mode = RegionSearchMode::randomized;
  } else {
    throw ValidationError("augment: --search must be deterministic or randomized");
  }

  const ImageDataset data = io::read_image_dir(a.input);
  if (data.images.empty()) throw IoError("augment: no .pbim files under " + a.input);
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < data.images.size(); ++i) members[data.labels[i]].push_back(i);
  std::map<int, std::size_t> sizes;
  for (const auto& [c, idx] : members) sizes[c] = idx.size();
  const BalancePlan plan = balance_plan(sizes);

  ImageDataset result;
  result.images = data.images;
  result.labels = data.labels;
  result.names = data.names;
  std::size_t generated = 0;
  for (const auto& [cls, idx] : members) {
    const std::size_t count = plan.counts.at(cls);
    if (count == 0) continue;
    std::vector<ImageTensor> images;
    std::vector<SaliencyMap> maps;
    for (std::size_t i : idx) {
      images.push_back(data.images[i]);
      if (!data.saliencies.empty()) maps.push_back(data.saliencies[i]);
    }
    Rng rng(derive_seed(*a.seed, static_cast<std::uint64_t>(cls)));
    const auto augmented = augment_class(images, maps, count, params, rng);
    for (std::size_t k = 0; k < augmented.size(); ++k) {
      result.images.push_back(augmented[k].image);
      result.labels.push_back(cls);
      char serial[16];
      std::snprintf(serial, sizeof serial, "aug_%06zu", k);
      result.names.push_back(std::string(serial) + "_from_" + data.names[idx[augmented[k].source_index]]);
    }
    generated += augmented.size();
  }
  io::write_image_dir(a.out, result);
  out << "generated " << generated << " images; every class now has " << sizes.at(plan.reference_class)
      << " images\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exemplar sampling and class-incremental learning toolkit"};
  app.name("pbes");
  app.require_subcommand(1);

  SampleArgs sample_args;
  auto* sample_cmd = app.add_subcommand("sample", "Select exemplars from one class's points");
  sample_cmd->add_option("--input", sample_args.input, "Feature CSV or PBIM class directory")->required();
  sample_cmd->add_option("--method", sample_args.method, "pbes, randp, herding or random")->required();
  sample_cmd->add_option("--m", sample_args.m, "Number of exemplars")->required();
  sample_cmd->add_option("--seed", sample_args.seed, "Seed (randp and random)");
  sample_cmd->add_option("--class", sample_args.cls, "Only use rows of this class");
  sample_cmd->add_option("--randp-directions", sample_args.randp_pool, "Random direction pool size (0: one per step)");
  sample_cmd->add_option("--out", sample_args.out, "Index file; rows go to <out>.rows.csv")->required();

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "Run one class-incremental experiment");
  RunArgs sweep_args;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run one experiment per memory budget");
  for (auto [cmd, a] : {std::pair{run_cmd, &run_args}, std::pair{sweep_cmd, &sweep_args}}) {
    cmd->add_option("--config", a->config, "Experiment JSON")->required();
    cmd->add_option("--seed", a->seed, "Master seed (overrides the config)");
    cmd->add_option("--mode", a->mode, "finetune, method or upperbound");
    cmd->add_option("--out", a->out, "Metrics CSV path (stdout if omitted)");
  }
  run_cmd->add_option("--save-model", run_args.save_model, "Write the final model checkpoint");
  sweep_cmd->add_option("--budgets", sweep_args.budgets, "Comma-separated memory budgets");

  GenArgs gen_args;
  auto* gen_cmd = app.add_subcommand("gen", "Write a synthetic stream as CSV (and optionally PBIM)");
  gen_cmd->add_option("--config", gen_args.config, "Experiment JSON with a synthetic stream")->required();
  gen_cmd->add_option("--seed", gen_args.seed, "Master seed (overrides the config)");
  gen_cmd->add_option("--out", gen_args.out, "Output directory")->required();
  gen_cmd->add_option("--image-shape", gen_args.image_shape, "c,h,w to also write PBIM images");

  std::string stats_in, stats_out;
  auto* stats_cmd = app.add_subcommand("stats", "Per-class channel variance and class counts");
  stats_cmd->add_option("--input", stats_in, "PBIM class directory")->required();
  stats_cmd->add_option("--out", stats_out, "Output directory")->required();

  AugmentArgs aug_args;
  auto* aug_cmd = app.add_subcommand("augment", "Balance classes with selective-cut images");
  aug_cmd->add_option("--input", aug_args.input, "PBIM class directory")->required();
  aug_cmd->add_option("--out", aug_args.out, "Output directory")->required();
  aug_cmd->add_option("--seed", aug_args.seed, "Master seed");
  aug_cmd->add_option("--search", aug_args.search, "deterministic or randomized");
  aug_cmd->add_option("--tau", aug_args.tau, "Quantile gate for randomized search");
  aug_cmd->add_option("--region-height", aug_args.region_height, "Cut height (0: a quarter of the image)");
  aug_cmd->add_option("--region-width", aug_args.region_width, "Cut width (0: a quarter of the image)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*sample_cmd) return cmd_sample(sample_args, out);
    if (*run_cmd) return cmd_run(run_args, out);
    if (*sweep_cmd) return cmd_sweep(sweep_args, out, err);
    if (*gen_cmd) return cmd_gen(gen_args, out);
    if (*stats_cmd) return cmd_stats(stats_in, stats_out, out);
    if (*aug_cmd) return cmd_augment(aug_args, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  }
  return kValidation;
}

}  // namespace pbes::cli

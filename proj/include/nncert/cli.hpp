#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nncert/certify.hpp"
#include "nncert/dataset.hpp"
#include "nncert/error.hpp"
#include "nncert/features.hpp"
#include "nncert/io.hpp"
#include "nncert/neighbors.hpp"
#include "nncert/oracle.hpp"
#include "nncert/parallel.hpp"
#include "nncert/random.hpp"
#include "nncert/report.hpp"

namespace nncert::cli {

enum class SourceFormat { mnist, cifar10, csv };
enum class FeatureKind { raw, hog, csv };

inline std::string_view to_string(SourceFormat s) {
  switch (s) {
    case SourceFormat::mnist: return "mnist";
    case SourceFormat::cifar10: return "cifar10";
    case SourceFormat::csv: return "csv";
  }
  return "mnist";
}
inline std::string_view to_string(FeatureKind f) {
  switch (f) {
    case FeatureKind::raw: return "raw";
    case FeatureKind::hog: return "hog";
    case FeatureKind::csv: return "csv";
  }
  return "raw";
}

struct Subsample {
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::uint64_t seed = 0;
};

struct RunConfig {
  SourceFormat dataset = SourceFormat::mnist;
  std::vector<std::string> train_paths;
  std::vector<std::string> test_paths;
  int classes = 10;
  Algorithm algo = Algorithm::rnn;
  std::optional<std::size_t> k;
  std::optional<double> r;
  FeatureKind feature = FeatureKind::hog;
  HogParams hog;
  bool hog_cell_set = false;
  std::optional<int> trigger;  // square side
  int trigger_intensity = 255;
  std::int64_t e_max = 200;
  std::int64_t e_step = 10;
  Method method = Method::individual;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string out;
  std::optional<Subsample> subsample;
  bool feature_explicit = false;  // --feature given on the command line

  /// Fills dataset-dependent defaults and checks flag combinations.
  void resolve() {
    if (dataset == SourceFormat::csv) {
      if (feature != FeatureKind::csv && feature_explicit)
        throw Error(ErrorCode::invalid_argument, "csv datasets carry their own features; use --feature csv");
      feature = FeatureKind::csv;
    } else if (feature == FeatureKind::csv) {
      throw Error(ErrorCode::invalid_argument, "--feature csv requires --dataset csv");
    }
    if (dataset == SourceFormat::cifar10 && !hog_cell_set) hog.cell_side = HogParams::cifar10().cell_side;
    if (algo == Algorithm::knn) {
      if (r) throw Error(ErrorCode::invalid_argument, "--r is only valid with --algo rnn");
      if (!k) k = 5000;
      if (*k < 1) throw Error(ErrorCode::invalid_argument, "--k must be >= 1");
    } else {
      if (k) throw Error(ErrorCode::invalid_argument, "--k is only valid with --algo knn");
      if (!r) {
        if (dataset == SourceFormat::csv) throw Error(ErrorCode::invalid_argument, "--r is required for csv datasets");
        r = dataset == SourceFormat::mnist ? 4.0 : 20.0;
      }
      if (!(*r >= 0)) throw Error(ErrorCode::invalid_argument, "--r must be >= 0");
    }
    if (method != Method::individual && algo != Algorithm::rnn)
      throw Error(ErrorCode::knn_not_supported, "joint certification requires rnn");
    if (e_step < 1) throw Error(ErrorCode::invalid_argument, "--e-step must be >= 1");
    if (e_max < 0) throw Error(ErrorCode::invalid_argument, "--e-max must be >= 0");
    if (trigger && dataset == SourceFormat::csv)
      throw Error(ErrorCode::invalid_argument, "--trigger needs image datasets");
    if (dataset == SourceFormat::mnist && (train_paths.size() != 2 || test_paths.size() != 2))
      throw Error(ErrorCode::invalid_argument, "mnist expects two --train and two --test paths (images, labels)");
    if (dataset == SourceFormat::csv && (train_paths.size() != 1 || test_paths.size() != 1))
      throw Error(ErrorCode::invalid_argument, "csv expects one --train and one --test path");
    if (train_paths.empty() || test_paths.empty())
      throw Error(ErrorCode::invalid_argument, "--train and --test paths are required");
  }

  Classifier classifier() const { return algo == Algorithm::knn ? Classifier::knn(*k) : Classifier::rnn(*r); }
};

inline int default_trigger_side(SourceFormat s) { return s == SourceFormat::cifar10 ? 10 : 5; }

inline LabeledImages load_images(SourceFormat fmt, const std::vector<std::string>& paths) {
  if (fmt == SourceFormat::mnist) {
    if (paths.size() != 2) throw Error(ErrorCode::invalid_argument, "mnist expects an images path and a labels path");
    return load_idx(paths[0], paths[1]);
  }
  if (fmt == SourceFormat::cifar10) return load_cifar10(paths);
  throw Error(ErrorCode::invalid_argument, "not an image format");
}

inline LabeledImages select_images(const LabeledImages& in, const std::vector<std::size_t>& idx) {
  LabeledImages out;
  for (auto i : idx) {
    out.images.push_back(in.images[i]);
    out.labels.push_back(in.labels[i]);
  }
  return out;
}

/// Feature rows for every image, extracted in parallel; row order follows the input.
inline Dataset extract_features(const LabeledImages& in, FeatureKind kind, const HogParams& hog_params,
                                int classes, unsigned threads) {
  std::vector<FeatureVector> rows(in.images.size());
  parallel_for(in.images.size(), threads, [&](std::size_t i) {
    rows[i] = kind == FeatureKind::hog ? hog(in.images[i], hog_params) : flatten_raw(in.images[i]);
  });
  Dataset d(rows.empty() ? 0 : rows.front().size(), classes);
  d.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) d.push_back(rows[i], in.labels[i]);
  return d;
}

inline std::string file_sha256(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, path + ": cannot open file");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return RankHash{sha256(bytes)}.hex();
}

struct PreparedData {
  Dataset train;
  TestSet test;
};

inline PreparedData prepare(const RunConfig& cfg) {
  PreparedData out;
  if (cfg.dataset == SourceFormat::csv) {
    out.train = load_feature_csv(cfg.train_paths[0], cfg.classes);
    out.test = load_feature_csv(cfg.test_paths[0], cfg.classes);
    if (cfg.subsample) {
      out.train = out.train.select(seeded_subsample(out.train.size(), cfg.subsample->n_train, cfg.subsample->seed));
      out.test = out.test.select(seeded_subsample(out.test.size(), cfg.subsample->n_test, cfg.subsample->seed + 1));
    }
    return out;
  }
  auto train = load_images(cfg.dataset, cfg.train_paths);
  auto test = load_images(cfg.dataset, cfg.test_paths);
  if (cfg.subsample) {
    train = select_images(train, seeded_subsample(train.images.size(), cfg.subsample->n_train, cfg.subsample->seed));
    test = select_images(test, seeded_subsample(test.images.size(), cfg.subsample->n_test, cfg.subsample->seed + 1));
  }
  if (cfg.trigger) test.images = make_backdoor_testset(test.images, *cfg.trigger, cfg.trigger_intensity);
  out.train = extract_features(train, cfg.feature, cfg.hog, cfg.classes, cfg.threads);
  out.test = extract_features(test, cfg.feature, cfg.hog, cfg.classes, cfg.threads);
  return out;
}

inline nlohmann::ordered_json config_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["dataset"] = std::string(to_string(cfg.dataset));
  j["classes"] = cfg.classes;
  j["algo"] = std::string(to_string(cfg.algo));
  if (cfg.k) j["k"] = *cfg.k;
  if (cfg.r) j["r"] = *cfg.r;
  j["feature"] = std::string(to_string(cfg.feature));
  if (cfg.feature == FeatureKind::hog)
    j["hog"] = {{"orientations", cfg.hog.orientations}, {"cell", cfg.hog.cell_side}, {"block", cfg.hog.block_side},
                {"stride", cfg.hog.block_stride},        {"clip", cfg.hog.clip}};
  if (cfg.trigger)
    j["trigger"] = {{"side", *cfg.trigger}, {"intensity", cfg.trigger_intensity}};
  else
    j["trigger"] = nullptr;
  j["e_max"] = cfg.e_max;
  j["e_step"] = cfg.e_step;
  j["method"] = std::string(to_string(cfg.method));
  j["seed"] = cfg.seed;
  if (cfg.subsample)
    j["subsample"] = {{"n_train", cfg.subsample->n_train}, {"n_test", cfg.subsample->n_test},
                      {"seed", cfg.subsample->seed}};
  else
    j["subsample"] = nullptr;
  return j;
}

/// Writes the curve CSV to cfg.out and the resolved configuration with input
/// digests to cfg.out + ".json".
inline std::vector<CurvePoint> cmd_certify(RunConfig cfg) {
  cfg.resolve();
  const auto data = prepare(cfg);
  const RankedDataset train(data.train, cfg.threads);
  CurveOptions opt{cfg.classifier(), e_grid(cfg.e_max, cfg.e_step), cfg.method, cfg.seed, cfg.threads};
  const auto points = curve(train, data.test, opt);

  std::ofstream csv(cfg.out, std::ios::binary);
  if (!csv) throw Error(ErrorCode::io_error, cfg.out + ": cannot open for writing");
  write_curve_csv(csv, points);
  if (!csv) throw Error(ErrorCode::io_error, cfg.out + ": write failed");

  nlohmann::ordered_json side;
  side["config"] = config_json(cfg);
  auto files = [](const std::vector<std::string>& paths) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& p : paths) arr.push_back({{"path", p}, {"sha256", file_sha256(p)}});
    return arr;
  };
  side["inputs"] = {{"train", files(cfg.train_paths)}, {"test", files(cfg.test_paths)}};
  side["n_train"] = data.train.size();
  side["n_test"] = data.test.size();
  side["feature_dim"] = data.train.dim();
  side["clean_accuracy"] = to_decimal6(points.front().ca_individual);  // the grid always starts at e = 0
  std::ofstream js(cfg.out + ".json", std::ios::binary);
  if (!js) throw Error(ErrorCode::io_error, cfg.out + ".json: cannot open for writing");
  js << side.dump(2) << '\n';
  return points;
}

struct IngestConfig {
  SourceFormat source = SourceFormat::mnist;
  std::vector<std::string> paths;
  FeatureKind feature = FeatureKind::hog;
  HogParams hog;
  bool hog_cell_set = false;
  int classes = 10;
  unsigned threads = 0;
  std::string out;
};

/// Converts an image dataset into a feature CSV.
inline std::size_t cmd_ingest(IngestConfig cfg) {
  if (cfg.source == SourceFormat::csv) throw Error(ErrorCode::invalid_argument, "ingest reads mnist or cifar10 files");
  if (cfg.feature == FeatureKind::csv) throw Error(ErrorCode::invalid_argument, "ingest extracts raw or hog features");
  if (cfg.source == SourceFormat::cifar10 && !cfg.hog_cell_set) cfg.hog.cell_side = HogParams::cifar10().cell_side;
  const auto images = load_images(cfg.source, cfg.paths);
  const auto d = extract_features(images, cfg.feature, cfg.hog, cfg.classes, cfg.threads);
  save_feature_csv(cfg.out, d);
  return d.size();
}

struct OracleConfig {
  std::uint64_t seed = 2021;
  std::size_t instances = 100;
  std::size_t joint_instances = 50;
  std::int64_t max_budget = 2;
  std::int64_t budget_offset = 0;
  std::string out;
};

inline oracle::SweepReport cmd_oracle(const OracleConfig& cfg) {
  oracle::SweepLimits lim;
  lim.max_budget = cfg.max_budget;
  auto rep = oracle::run_sweep(cfg.seed, cfg.instances, cfg.joint_instances, lim, cfg.budget_offset);
  const auto text = oracle::to_json(rep).dump(2) + "\n";
  if (cfg.out.empty() || cfg.out == "-") {
    std::cout << text;
  } else {
    std::ofstream os(cfg.out, std::ios::binary);
    if (!os) throw Error(ErrorCode::io_error, cfg.out + ": cannot open for writing");
    os << text;
  }
  return rep;
}

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitViolation = 2;

namespace detail {

inline SourceFormat parse_source(const std::string& s) {
  if (s == "mnist") return SourceFormat::mnist;
  if (s == "cifar10") return SourceFormat::cifar10;
  return SourceFormat::csv;
}
inline FeatureKind parse_feature(const std::string& s) {
  if (s == "raw") return FeatureKind::raw;
  if (s == "hog") return FeatureKind::hog;
  return FeatureKind::csv;
}

inline void add_hog_flags(CLI::App* app, HogParams& hog, bool& cell_set) {
  app->add_option("--hog-orientations", hog.orientations, "HOG orientation bins over [0,180)")->capture_default_str();
  app->add_option_function<int>(
         "--hog-cell",
         [&](const int& v) {
           hog.cell_side = v;
           cell_set = true;
         },
         "HOG cell side in pixels (default 7 for mnist, 8 for cifar10)");
  app->add_option("--hog-block", hog.block_side, "HOG block side in cells")->capture_default_str();
  app->add_option("--hog-stride", hog.block_stride, "HOG block stride in cells")->capture_default_str();
  app->add_option("--hog-clip", hog.clip, "L2-Hys clipping threshold")->capture_default_str();
}

}  // namespace detail

/// Entry point shared by the nncert binary and the tests.
inline int run(int argc, const char* const* argv, std::ostream& err = std::cerr) {
  CLI::App app{"Certified accuracy of kNN and rNN classifiers under data poisoning"};
  app.require_subcommand(1);

  RunConfig rc;
  std::vector<std::size_t> subsample;
  std::optional<int> trigger_value;
  auto* certify = app.add_subcommand("certify", "Certified-accuracy curve for a train/test pair");
  std::string dataset_name = "mnist", algo_name = "rnn", feature_name = "hog", method_name = "individual";
  certify->add_option("--dataset", dataset_name, "mnist, cifar10 or csv")
      ->check(CLI::IsMember({"mnist", "cifar10", "csv"}))
      ->capture_default_str();
  certify->add_option("--train", rc.train_paths, "training files (mnist: images labels; cifar10: batches)")
      ->required();
  certify->add_option("--test", rc.test_paths, "test files")->required();
  certify->add_option("--classes", rc.classes, "number of classes")->capture_default_str();
  certify->add_option("--algo", algo_name, "knn or rnn")->check(CLI::IsMember({"knn", "rnn"}))->capture_default_str();
  certify->add_option("--k", rc.k, "neighbors for kNN (default 5000)");
  certify->add_option("--r", rc.r, "L1 radius for rNN (default 4 mnist, 20 cifar10)");
  auto* feature_opt = certify->add_option("--feature", feature_name, "raw, hog or csv")
                          ->check(CLI::IsMember({"raw", "hog", "csv"}))
                          ->capture_default_str();
  detail::add_hog_flags(certify, rc.hog, rc.hog_cell_set);
  auto* trigger_opt = certify->add_option("--trigger", trigger_value,
                                          "backdoor the test set with a white square of this side "
                                          "(bare flag: 5 for mnist, 10 for cifar10)")
                          ->expected(0, 1);
  certify->add_option("--trigger-intensity", rc.trigger_intensity, "trigger pixel value")->capture_default_str();
  certify->add_option("--e-max", rc.e_max, "largest poisoning size on the grid")->capture_default_str();
  certify->add_option("--e-step", rc.e_step, "grid step")->capture_default_str();
  certify->add_option("--method", method_name, "individual, joint-rd or joint-island")
      ->check(CLI::IsMember({"individual", "joint-rd", "joint-island"}))
      ->capture_default_str();
  certify->add_option("--seed", rc.seed, "seed for random division grouping")->capture_default_str();
  certify->add_option("--threads", rc.threads, "worker threads (0 = all cores)")->capture_default_str();
  certify->add_option("--out", rc.out, "curve CSV path; the JSON sidecar goes to <out>.json")->required();
  certify->add_option("--subsample", subsample, "n_train n_test seed")->expected(3);

  OracleConfig oc;
  auto* orc = app.add_subcommand("oracle", "Brute-force soundness sweep over random toy instances");
  orc->add_option("--seed", oc.seed, "master seed")->capture_default_str();
  orc->add_option("--instances", oc.instances, "individual-certificate instances")->capture_default_str();
  orc->add_option("--joint-instances", oc.joint_instances, "joint-certificate instances")->capture_default_str();
  orc->add_option("--max-budget", oc.max_budget, "largest poisoning size enumerated")->capture_default_str();
  orc->add_option("--budget-offset", oc.budget_offset,
                  "attack with certified size + offset (negative testing; expect violations)")
      ->capture_default_str();
  orc->add_option("--out", oc.out, "report path (default stdout)");

  IngestConfig ic;
  auto* ingest = app.add_subcommand("ingest", "Convert an image dataset to a feature CSV");
  std::string ingest_source = "mnist", ingest_feature = "hog";
  ingest->add_option("--dataset", ingest_source, "mnist or cifar10")
      ->check(CLI::IsMember({"mnist", "cifar10"}))
      ->capture_default_str();
  ingest->add_option("--feature", ingest_feature, "raw or hog")
      ->check(CLI::IsMember({"raw", "hog"}))
      ->capture_default_str();
  detail::add_hog_flags(ingest, ic.hog, ic.hog_cell_set);
  ingest->add_option("--threads", ic.threads, "worker threads (0 = all cores)");
  ingest->add_option("--out", ic.out, "output CSV")->required();
  ingest->add_option("paths", ic.paths, "input files (mnist: images labels; cifar10: batches)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      std::cout << app.help();
      return kExitOk;
    }
    err << "nncert: " << e.what() << '\n';
    return kExitError;
  }

  try {
    if (*certify) {
      rc.dataset = detail::parse_source(dataset_name);
      rc.algo = algo_name == "knn" ? Algorithm::knn : Algorithm::rnn;
      rc.feature = detail::parse_feature(feature_name);
      rc.method = parse_method(method_name);
      rc.feature_explicit = feature_opt->count() > 0;
      if (trigger_opt->count() > 0) rc.trigger = trigger_value.value_or(default_trigger_side(rc.dataset));
      if (!subsample.empty()) rc.subsample = Subsample{subsample[0], subsample[1], subsample[2]};
      cmd_certify(rc);
      return kExitOk;
    }
    if (*orc) {
      const auto rep = cmd_oracle(oc);
      if (!rep.ok()) {
        err << "nncert: " << rep.violations.size() << " certificate violations\n";
        return kExitViolation;
      }
      return kExitOk;
    }
    if (*ingest) {
      ic.source = detail::parse_source(ingest_source);
      ic.feature = detail::parse_feature(ingest_feature);
      cmd_ingest(ic);
      return kExitOk;
    }
  } catch (const std::exception& e) {
    err << "nncert: error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

}  // namespace nncert::cli

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "irstd/acm.hpp"
#include "irstd/bench.hpp"
#include "irstd/dataset.hpp"
#include "irstd/detectors.hpp"
#include "irstd/error.hpp"
#include "irstd/image_io.hpp"
#include "irstd/metrics.hpp"
#include "irstd/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  out << text;
}

irstd::DetectorSuite load_suite(const std::string& config) {
  if (config.empty()) return {};
  std::ifstream in(config);
  if (!in) throw UsageError("cannot open config: " + config);
  try {
    return irstd::DetectorSuite::from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw UsageError("malformed config " + config + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw UsageError("invalid config " + config + ": " + e.what());
  }
}

void require_method(const std::string& method) {
  const auto& names = irstd::method_names();
  if (std::find(names.begin(), names.end(), method) == names.end()) {
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    throw UsageError("unknown method '" + method + "' (expected one of: " + list + ")");
  }
}

// Saliency is stored as 16-bit PNG of (v - offset) / scale; the sidecar
// holds offset and scale.
void write_saliency(const fs::path& png, const fs::path& sidecar, const irstd::GrayImage& s) {
  const double lo = s.min(), hi = s.max();
  const double scale = hi > lo ? hi - lo : 1.0;
  std::vector<double> px(s.data());
  for (double& v : px) v = (v - lo) / scale;
  irstd::io::write_image(png, irstd::GrayImage(s.height(), s.width(), std::move(px)), irstd::io::BitDepth::Sixteen);
  write_json(sidecar, {{"offset", lo}, {"scale", scale}, {"bit_depth", 16}});
}

int cmd_detect(const std::string& method, const std::string& input, const std::string& config,
               const std::string& out_dir) {
  require_method(method);
  if (!fs::is_regular_file(input)) throw UsageError("input not found: " + input);
  const irstd::DetectorSuite suite = load_suite(config);
  const irstd::GrayImage img = irstd::io::read_image(input);
  const irstd::Detection det = suite.run(method, img);

  fs::create_directories(out_dir);
  const std::string stem = fs::path(input).stem().string();
  const fs::path dir(out_dir);
  write_saliency(dir / (stem + "_saliency.png"), dir / (stem + "_saliency.json"), det.saliency);
  irstd::io::write_mask(dir / (stem + "_mask.png"), det.mask);
  json j = irstd::to_json(det);
  j["method"] = method;
  j["input"] = input;
  write_json(dir / (stem + "_detection.json"), j);
  return kOk;
}

std::map<std::string, fs::path> images_by_stem(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw UsageError("not a directory: " + dir.string());
  std::map<std::string, fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto ext = e.path().extension();
    if (e.is_regular_file() && (ext == ".png" || ext == ".pgm")) {
      std::string stem = e.path().stem().string();
      if (stem.size() > 5 && stem.ends_with("_mask")) stem.resize(stem.size() - 5);
      out[stem] = e.path();
    }
  }
  return out;
}

int cmd_eval(const std::string& pred_dir, const std::string& gt_dir, const std::string& out) {
  const auto preds = images_by_stem(pred_dir), gts = images_by_stem(gt_dir);
  std::vector<std::string> offenders;
  for (const auto& [stem, _] : preds)
    if (!gts.count(stem)) offenders.push_back(stem + " (prediction only)");
  for (const auto& [stem, _] : gts)
    if (!preds.count(stem)) offenders.push_back(stem + " (ground truth only)");
  if (!offenders.empty()) {
    std::string msg = "file stems do not match:";
    for (const auto& o : offenders) msg += "\n  " + o;
    throw UsageError(msg);
  }
  if (gts.empty()) throw UsageError("no masks found in " + gt_dir);

  irstd::MetricReport report;
  std::vector<irstd::BinaryMask> pm, gm;
  for (const auto& [stem, gt_path] : gts) {
    pm.push_back(irstd::io::read_mask(preds.at(stem)));
    gm.push_back(irstd::io::read_mask(gt_path));
    if (!pm.back().same_dims(gm.back().height(), gm.back().width()))
      throw UsageError("size mismatch for " + stem);
    report.ids.push_back(stem);
    report.samples.push_back(irstd::sample_counts(pm.back(), gm.back()));
  }
  report.iou = irstd::iou(report.samples);
  report.niou = irstd::niou(report.samples);
  json j = irstd::to_json(report);
  const irstd::DetectionRates rates = irstd::detection_rates(pm, gm);
  j["pd"] = rates.pd();
  j["fa"] = rates.fa();
  emit(out, j.dump(2) + "\n");
  return kOk;
}

irstd::Corpus open_corpus(const fs::path& root) {
  if (!fs::is_directory(root)) throw UsageError("corpus not found: " + root.string());
  if (fs::is_regular_file(root / "manifest.json")) return irstd::load_corpus(root, root / "manifest.json");
  return irstd::load_directory(root);
}

int cmd_roc(const std::string& method, const std::string& corpus_dir, int thresholds, const std::string& config,
            const std::string& out) {
  require_method(method);
  if (thresholds < 2) throw UsageError("--thresholds must be >= 2");
  const irstd::DetectorSuite suite = load_suite(config);
  const irstd::Corpus corpus = open_corpus(corpus_dir);
  const auto samples = corpus.all();
  std::vector<irstd::GrayImage> sal(samples.size());
  std::vector<irstd::BinaryMask> gts(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    sal[i] = suite.run(method, samples[i]->image).saliency;
    gts[i] = samples[i]->semantic_mask;
  }
  const auto th = irstd::sweep_thresholds(sal, thresholds);
  emit(out, irstd::roc_csv(irstd::roc_sweep(sal, gts, th)));
  return kOk;
}

int cmd_bench(const std::string& suite, const irstd::bench::BenchOptions& opt, const std::string& out) {
  if (suite != "mpcm" && suite != "rpca" && suite != "ript-stop")
    throw UsageError("unknown suite '" + suite + "' (expected mpcm, rpca or ript-stop)");
  try {
    opt.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const irstd::bench::BenchReport r = irstd::bench::run_suite(suite, opt);
  emit(out, r.to_json().dump(2) + "\n");
  if (!r.guard_passed) {
    std::cerr << "quality guard failed: accelerated output does not match the baseline\n";
    return kRuntime;
  }
  return kOk;
}

int cmd_synth(const std::string& out_dir, std::uint64_t seed, int count, int size, const std::string& config) {
  irstd::SynthConfig cfg;
  if (!config.empty()) {
    std::ifstream in(config);
    if (!in) throw UsageError("cannot open config: " + config);
    cfg = irstd::synth_config_from_json(json::parse(in));
  }
  cfg.seed = seed;
  if (count > 0) cfg.count = count;
  if (size > 0) cfg.height = cfg.width = size;
  cfg.validate();
  const auto generated = irstd::synth_generate(cfg);
  std::vector<irstd::AnnotatedSample> samples;
  for (const auto& g : generated) samples.push_back(g.sample);
  // Stale files from a previous run would break idempotence.
  fs::remove_all(fs::path(out_dir) / "images");
  fs::remove_all(fs::path(out_dir) / "masks");
  irstd::save_corpus(out_dir, samples, "test");
  write_json(fs::path(out_dir) / "synth_config.json", irstd::to_json(cfg));
  return kOk;
}

int cmd_stats(const std::string& corpus_dir, const std::string& out) {
  const irstd::Corpus corpus = open_corpus(corpus_dir);
  emit(out, irstd::to_json(irstd::statistics(corpus.all())).dump(2) + "\n");
  return kOk;
}

int cmd_gradcheck(const std::string& out, double limit) {
  json report = json::object();
  bool ok = true;
  for (auto v : irstd::acm::all_variants()) {
    const auto r = irstd::acm::gradient_check(v);
    report[irstd::acm::variant_name(v)] = irstd::acm::to_json(r);
    ok = ok && r.max_rel_error <= limit;
  }
  report["limit"] = limit;
  report["passed"] = ok;
  emit(out, report.dump(2) + "\n");
  return ok ? kOk : kRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Infrared small-target detection toolkit"};
  app.require_subcommand(1);

  std::string method, input, config, out_dir, out, pred_dir, gt_dir, corpus, suite;
  int thresholds = 200, count = 0, size = 0;
  std::uint64_t seed = 1;
  double limit = 1e-4;
  irstd::bench::BenchOptions bench_opt;

  auto* detect = app.add_subcommand("detect", "Run one detector on one image");
  detect->add_option("--method", method, "tophat, mpcm, mpcm-naive, ipi, nipps or ript")->required();
  detect->add_option("--input", input, "Input PNG/PGM")->required();
  detect->add_option("--config", config, "JSON detector settings");
  detect->add_option("--out-dir", out_dir, "Output directory")->required();

  auto* eval = app.add_subcommand("eval", "Score predicted masks against ground truth");
  eval->add_option("--pred-dir", pred_dir)->required();
  eval->add_option("--gt-dir", gt_dir)->required();
  eval->add_option("--out", out, "Write JSON here instead of stdout");

  auto* roc = app.add_subcommand("roc", "Pd/Fa sweep of a detector over a corpus");
  roc->add_option("--method", method)->required();
  roc->add_option("--corpus", corpus, "Corpus root (images/, masks/, optional manifest.json)")->required();
  roc->add_option("--thresholds", thresholds, "Number of sweep thresholds");
  roc->add_option("--config", config);
  roc->add_option("--out", out);

  auto* bench = app.add_subcommand("bench", "Timing suites with quality guards");
  bench->add_option("--suite", suite, "mpcm, rpca or ript-stop")->required();
  bench->add_option("--runs", bench_opt.runs, "Timed runs (>= 5)");
  bench->add_option("--seed", bench_opt.seed);
  bench->add_option("--out", out);

  auto* synth = app.add_subcommand("synth", "Generate a synthetic annotated corpus");
  synth->add_option("--out-dir", out_dir)->required();
  synth->add_option("--seed", seed);
  synth->add_option("--count", count, "Number of images");
  synth->add_option("--size", size, "Square image side");
  synth->add_option("--config", config, "JSON generator settings");

  auto* stats = app.add_subcommand("stats", "Corpus statistics");
  stats->add_option("--corpus", corpus)->required();
  stats->add_option("--out", out);

  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of every fusion variant");
  grad->add_option("--out", out);
  grad->add_option("--limit", limit, "Maximum allowed relative error");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    irstd::configure_threads_from_env();
    if (*detect) return cmd_detect(method, input, config, out_dir);
    if (*eval) return cmd_eval(pred_dir, gt_dir, out);
    if (*roc) return cmd_roc(method, corpus, thresholds, config, out);
    if (*bench) return cmd_bench(suite, bench_opt, out);
    if (*synth) return cmd_synth(out_dir, seed, count, size, config);
    if (*stats) return cmd_stats(corpus, out);
    if (*grad) return cmd_gradcheck(out, limit);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}

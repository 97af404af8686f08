#include "irstd/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <thread>
#include <vector>

#include "irstd/dataset.hpp"
#include "irstd/detectors.hpp"
#include "irstd/lowrank.hpp"
#include "irstd/parallel.hpp"
#include "irstd/problems.hpp"

namespace irstd::bench {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

double rel_error(const Eigen::MatrixXd& est, const Eigen::MatrixXd& truth) {
  const double n = truth.norm();
  return n > 0.0 ? (est - truth).norm() / n : est.norm();
}

GrayImage scene(int size, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.height = cfg.width = size;
  cfg.seed = seed;
  cfg.count = 1;
  cfg.target_count_probs = {0.0, 1.0};
  return synth_one(cfg, 0).sample.image;
}

}  // namespace

void BenchOptions::validate() const {
  if (runs < 5) throw std::invalid_argument("bench: --runs must be >= 5");
  if (warmups < 0) throw std::invalid_argument("bench: warm-up count must be >= 0");
  if (rpca_rows < 2 || rpca_cols < 2) throw std::invalid_argument("bench: rpca instance too small");
  if (ript_size < 64) throw std::invalid_argument("bench: ript scene must be at least 64 pixels");
}

double median_ms(const std::function<void()>& fn, int runs, int warmups) {
  for (int i = 0; i < warmups; ++i) fn();
  std::vector<double> t(static_cast<std::size_t>(runs));
  for (double& v : t) {
    const auto a = Clock::now();
    fn();
    v = elapsed_ms(a, Clock::now());
  }
  std::sort(t.begin(), t.end());
  const std::size_t m = t.size() / 2;
  return t.size() % 2 ? t[m] : 0.5 * (t[m - 1] + t[m]);
}

nlohmann::json BenchReport::to_json() const {
  nlohmann::json j = details;
  j["suite"] = suite;
  j["guard_passed"] = guard_passed;
  j["claim_passed"] = claim_passed;
  j["cpu"] = cpu_fingerprint();
  return j;
}

BenchReport mpcm_suite(const BenchOptions& opt) {
  opt.validate();
  ScopedThreads single(1);
  const GrayImage img = scene(256, opt.seed);
  const MpcmConfig cfg;
  const GrayImage slow = mpcm_naive(img, cfg), fast = mpcm_shifted(img, cfg);
  double max_diff = 0.0;
  for (std::size_t i = 0; i < slow.size(); ++i) max_diff = std::max(max_diff, std::abs(slow.data()[i] - fast.data()[i]));

  BenchReport r{"mpcm", max_diff <= 1e-9, false, {}};
  const double naive_ms = median_ms([&] { (void)mpcm_naive(img, cfg); }, opt.runs, opt.warmups);
  const double shifted_ms = median_ms([&] { (void)mpcm_shifted(img, cfg); }, opt.runs, opt.warmups);
  const double speedup = naive_ms / shifted_ms;
  r.claim_passed = r.guard_passed && speedup >= 1.1;
  r.details = {{"size", {256, 256}},  {"scales", cfg.scales}, {"runs", opt.runs},
               {"naive_ms", naive_ms}, {"shifted_ms", shifted_ms}, {"speedup", speedup},
               {"max_abs_diff", max_diff}};
  return r;
}

BenchReport rpca_suite(const BenchOptions& opt) {
  opt.validate();
  ScopedThreads single(1);
  const LowRankSparseProblem p = make_low_rank_sparse(opt.rpca_rows, opt.rpca_cols, 2, 0.01, 5.0, opt.seed);
  RpcaConfig cfg;
  cfg.lambda = 1.0 / std::sqrt(static_cast<double>(std::max(opt.rpca_rows, opt.rpca_cols)));
  cfg.tol = 1e-7;

  RpcaResult ialm, apg;
  const double ialm_ms = median_ms([&] { ialm = rpca_ialm(p.d, cfg); }, opt.runs, opt.warmups);
  const double apg_ms = median_ms([&] { apg = rpca_apg(p.d, cfg); }, opt.runs, opt.warmups);

  auto summary = [&](const RpcaResult& res, double ms) {
    return nlohmann::json{{"iterations", res.diagnostics.iterations},
                          {"svd_count", res.diagnostics.svd_count},
                          {"converged", res.diagnostics.converged},
                          {"median_ms", ms},
                          {"background_rel_error", rel_error(res.background, p.background)},
                          {"target_rel_error", rel_error(res.target, p.target)}};
  };
  const nlohmann::json a = summary(ialm, ialm_ms), b = summary(apg, apg_ms);
  auto recovered = [](const nlohmann::json& s) {
    return s["converged"].get<bool>() && s["background_rel_error"].get<double>() <= 1e-4 &&
           s["target_rel_error"].get<double>() <= 1e-4;
  };
  BenchReport r{"rpca", recovered(a) && recovered(b), false, {}};
  r.claim_passed = r.guard_passed && ialm.diagnostics.iterations <= apg.diagnostics.iterations;
  r.details = {{"size", {opt.rpca_rows, opt.rpca_cols}},
               {"rank", 2},
               {"density", 0.01},
               {"lambda", cfg.lambda},
               {"tol", cfg.tol},
               {"runs", opt.runs},
               {"ialm", a},
               {"apg", b},
               {"iteration_ratio", static_cast<double>(apg.diagnostics.iterations) / ialm.diagnostics.iterations},
               {"speedup", apg_ms / ialm_ms}};
  return r;
}

BenchReport ript_stop_suite(const BenchOptions& opt) {
  opt.validate();
  ScopedThreads single(1);
  const GrayImage img = scene(opt.ript_size, opt.seed);
  RiptConfig early;
  early.solver.probe_residual_stop = true;
  RiptConfig full;
  full.solver.stop_rule = StopRule::ResidualOnly;

  const Detection e = detect_ript(img, early), f = detect_ript(img, full);
  const auto& ed = *e.solver;
  const int early_it = ed["early_stop_iteration"].get<int>() > 0 ? ed["early_stop_iteration"].get<int>()
                                                                  : ed["iterations"].get<int>();
  const int full_it = (*f.solver)["iterations"].get<int>();
  const int probed_it = ed["residual_stop_iteration"].get<int>();

  RiptConfig early_plain;
  BenchReport r{"ript-stop", e.mask == f.mask, false, {}};
  const double early_ms = median_ms([&] { (void)detect_ript(img, early_plain); }, opt.runs, opt.warmups);
  const double full_ms = median_ms([&] { (void)detect_ript(img, full); }, opt.runs, opt.warmups);
  r.claim_passed = r.guard_passed && early_it <= full_it;
  r.details = {{"size", {opt.ript_size, opt.ript_size}},
               {"runs", opt.runs},
               {"early_stop_iterations", early_it},
               {"residual_only_iterations", full_it},
               {"probed_residual_iterations", probed_it},
               {"residual_only_converged", f.converged},
               {"iteration_ratio", static_cast<double>(full_it) / early_it},
               {"early_ms", early_ms},
               {"residual_only_ms", full_ms},
               {"speedup", full_ms / early_ms},
               {"mask_pixels", e.mask.count()},
               {"masks_identical", e.mask == f.mask}};
  return r;
}

BenchReport run_suite(const std::string& name, const BenchOptions& opt) {
  if (name == "mpcm") return mpcm_suite(opt);
  if (name == "rpca") return rpca_suite(opt);
  if (name == "ript-stop") return ript_stop_suite(opt);
  throw std::invalid_argument("unknown bench suite: " + name);
}

nlohmann::json cpu_fingerprint() {
  std::string model = "unknown";
  std::ifstream in("/proc/cpuinfo");
  for (std::string line; std::getline(in, line);)
    if (line.rfind("model name", 0) == 0) {
      const auto pos = line.find(':');
      if (pos != std::string::npos) model = line.substr(pos + 2);
      break;
    }
  return {{"model", model}, {"hardware_threads", std::thread::hardware_concurrency()}, {"bench_threads", 1}};
}

}  // namespace irstd::bench

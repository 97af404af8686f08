// Acceptance harness: one PASS/FAIL line per criterion. `--criterion N`
// runs a single criterion; the exit code is nonzero if any run criterion fails.
#include <CLI11.hpp>
#include <Eigen/SVD>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <random>

#include "irstd/acm.hpp"
#include "irstd/bench.hpp"
#include "irstd/dataset.hpp"
#include "irstd/detectors.hpp"
#include "irstd/lowrank.hpp"
#include "irstd/metrics.hpp"
#include "irstd/parallel.hpp"
#include "irstd/problems.hpp"
#include "irstd/reference.hpp"

using namespace irstd;
using Eigen::MatrixXd;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double rel_error(const MatrixXd& a, const MatrixXd& b) {
  const double n = b.norm();
  return n > 0.0 ? (a - b).norm() / n : a.norm();
}

Outcome mpcm_acceleration() {
  bench::BenchOptions opt;
  opt.runs = 10;
  const bench::BenchReport r = bench::mpcm_suite(opt);
  const double diff = r.details["max_abs_diff"].get<double>();
  const double speedup = r.details["speedup"].get<double>();
  return {diff <= 1e-9 && speedup >= 1.1,
          fmt("max|diff| %.3g (<= 1e-9), median speedup %.3fx over 10 runs (>= 1.1)", diff, speedup)};
}

Outcome ialm_vs_apg() {
  ScopedThreads single(1);
  const LowRankSparseProblem p = make_low_rank_sparse(2500, 484, 2, 0.01, 5.0, 1);
  RpcaConfig cfg;
  cfg.lambda = 1.0 / std::sqrt(2500.0);
  cfg.tol = 1e-7;
  const RpcaResult a = rpca_ialm(p.d, cfg);
  const RpcaResult b = rpca_apg(p.d, cfg);
  const double ab = rel_error(a.background, p.background), at = rel_error(a.target, p.target);
  const double bb = rel_error(b.background, p.background), bt = rel_error(b.target, p.target);
  const bool ok = a.diagnostics.converged && b.diagnostics.converged &&
                  a.diagnostics.iterations < b.diagnostics.iterations && std::max({ab, at, bb, bt}) <= 1e-4;
  return {ok, fmt("IALM %d it (B err %.2g, T err %.2g), APG %d it (B err %.2g, T err %.2g)",
                  a.diagnostics.iterations, ab, at, b.diagnostics.iterations, bb, bt)};
}

Outcome ript_early_stop() {
  bench::BenchOptions opt;
  opt.runs = 5;
  const bench::BenchReport r = bench::ript_stop_suite(opt);
  const auto& d = r.details;
  const int early = d["early_stop_iterations"].get<int>(), full = d["residual_only_iterations"].get<int>();
  const bool ok = d["masks_identical"].get<bool>() && d["mask_pixels"].get<std::size_t>() > 0 && early <= full;
  return {ok, fmt("early stop %d it vs residual-only %d it (ratio %.2f, time ratio %.2f), masks identical: %s, "
                  "%zu mask px",
                  early, full, d["iteration_ratio"].get<double>(), d["speedup"].get<double>(),
                  d["masks_identical"].get<bool>() ? "yes" : "no", d["mask_pixels"].get<std::size_t>())};
}

Outcome gradient_suite() {
  double worst = 0.0;
  std::string per;
  for (acm::ModulationVariant v : acm::all_variants()) {
    const acm::GradCheckReport r = acm::gradient_check(v);
    worst = std::max(worst, r.max_rel_error);
    per += fmt("%s %.2g; ", acm::variant_name(v), r.max_rel_error);
  }
  return {worst <= 1e-4, per + fmt("max %.2g (<= 1e-4)", worst)};
}

Outcome parameter_budget() {
  int checked = 0, bad = 0;
  for (int c : {8, 16, 32, 64})
    for (acm::ModulationVariant v : acm::all_variants()) {
      ++checked;
      if (acm::param_count(v, c) != static_cast<std::size_t>(c) * c) ++bad;
    }
  return {bad == 0, fmt("%d/%d (variant, C) pairs equal C^2", checked - bad, checked)};
}

Outcome backbone() {
  const acm::BackbonePlan p = acm::backbone_plan(3);
  std::vector<int> heights;
  for (const auto& s : p.stages) heights.push_back(s.height);
  const bool ok = heights == std::vector<int>{480, 480, 240, 120} && p.weight_layer_count == 19;
  std::string hs;
  for (int h : heights) hs += std::to_string(h) + " ";
  return {ok, "stage heights " + hs + fmt("weight layers %d", p.weight_layer_count)};
}

Outcome metric_identities() {
  const std::vector<SampleCounts> batch = {{2, 4, 4}, {8, 8, 8}};
  const double i = iou(batch), n = niou(batch);
  bool ok = i == 10.0 / 14.0 && n == (1.0 / 3.0 + 1.0) / 2.0 && std::abs(i - 0.7143) < 5e-5 && i != n;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> dim(8, 24), count(1, 4);
  int monotone = 0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    const int h = dim(rng), w = dim(rng), k = count(rng);
    std::vector<GrayImage> maps;
    std::vector<BinaryMask> gts;
    for (int s = 0; s < k; ++s) {
      GrayImage img(h, w);
      BinaryMask m(h, w);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          img(y, x) = u(rng);
          m.set(y, x, u(rng) < 0.05);
        }
      m.set(h / 2, w / 2, true);
      maps.push_back(img);
      gts.push_back(m);
    }
    const auto roc = roc_sweep(maps, gts, sweep_thresholds(maps, 64));
    bool mono = roc.front().pd == 0.0 && roc.back().pd == 1.0;
    for (std::size_t t = 1; t < roc.size(); ++t) mono = mono && roc[t].pd >= roc[t - 1].pd && roc[t].fa >= roc[t - 1].fa;
    monotone += mono ? 1 : 0;
  }
  ok = ok && monotone == 100;
  return {ok, fmt("iou %.4f niou %.4f; %d/100 random sweeps monotone", i, n, monotone)};
}

Outcome desk_detection() {
  SynthConfig cfg;  // 256 x 256 defaults
  cfg.count = 30;
  cfg.seed = 1;
  const auto corpus = synth_generate(cfg);
  std::vector<BinaryMask> gts;
  for (const auto& s : corpus) gts.push_back(s.sample.semantic_mask);
  const DetectorSuite suite;
  bool ok = true;
  std::string detail;
  for (const char* method : {"ipi", "nipps", "ript", "mpcm", "tophat"}) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<GrayImage> maps;
    std::vector<SampleCounts> counts;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const Detection d = suite.run(method, corpus[i].sample.image);
      maps.push_back(d.saliency);
      counts.push_back(sample_counts(d.mask, gts[i]));
    }
    const double pd = pd_at_fa(roc_sweep(maps, gts, sweep_thresholds(maps, 1000)), 1e-3);
    const double corpus_iou = iou(counts);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    ok = ok && pd >= 0.9;
    if (std::string(method) == "ipi") ok = ok && corpus_iou >= 0.5;
    detail += fmt("%s Pd %.3f IoU %.3f (%.0fs); ", method, pd, corpus_iou, secs);
  }
  return {ok, detail + "need Pd >= 0.9 at Fa <= 1e-3, IPI IoU >= 0.5"};
}

Outcome invariants() {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> side(12, 40), ps(3, 12), st(1, 6);
  int failures = 0, checks = 0;
  auto expect = [&](bool c) {
    ++checks;
    failures += c ? 0 : 1;
  };

  for (int trial = 0; trial < 25; ++trial) {
    const int h = side(rng), w = side(rng);
    const int size = std::min({ps(rng), h, w});
    PatchConfig pc{size, std::min(st(rng), size), trial % 2 == 0};
    GrayImage img(h, w);
    for (double& v : img.pixels()) v = u(rng);
    const PatchMatrix pm = patchify(img, pc);
    expect((pm.data - reference::patchify(img, pc)).cwiseAbs().maxCoeff() == 0.0);
    for (Reducer r : {Reducer::Mean, Reducer::Median}) {
      const GrayImage back = unpatchify(pm, r);
      double d = 0.0;
      for (std::size_t i = 0; i < img.size(); ++i) d = std::max(d, std::abs(back.data()[i] - img.data()[i]));
      // Pixels no window covers are zero-filled, so identity needs full coverage.
      if (pc.boundary_anchor || ((h - pc.patch_size) % pc.stride == 0 && (w - pc.patch_size) % pc.stride == 0))
        expect(d <= 1e-12);
    }
    const PatchTensor pt = patch_tensor(img, pc);
    if (pc.boundary_anchor) {
      const GrayImage back = fold_tensor(pt);
      double d = 0.0;
      for (std::size_t i = 0; i < img.size(); ++i) d = std::max(d, std::abs(back.data()[i] - img.data()[i]));
      expect(d <= 1e-12);
    }
    for (int mode = 0; mode < 3; ++mode) {
      const Tensor3 t = Tensor3::fold(pt.data.unfold(mode), mode, pt.data.dim(0), pt.data.dim(1), pt.data.dim(2));
      expect(t.data() == pt.data.data());
    }
  }

  for (int trial = 0; trial < 10; ++trial) {
    const double tau = 0.05 + 0.5 * u(rng);
    MatrixXd m = MatrixXd::Random(15, 9) * 2.0;
    const MatrixXd s = soft_threshold(m, tau);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double x = s.data()[i], y = m.data()[i];
      auto obj = [&](double z) { return 0.5 * (z - y) * (z - y) + tau * std::abs(z); };
      expect(obj(x) <= obj(x + 1e-4) && obj(x) <= obj(x - 1e-4));
      expect(std::abs(x) <= std::abs(y) && x * y >= 0.0);
    }
    const MatrixXd v = svt(m, tau);
    const Eigen::JacobiSVD<MatrixXd> oracle(m), got(v);
    for (Eigen::Index k = 0; k < oracle.singularValues().size(); ++k)
      expect(std::abs(got.singularValues()(k) - std::max(oracle.singularValues()(k) - tau, 0.0)) <= 1e-10);
    expect((svt(m, 0.0) - m).cwiseAbs().maxCoeff() <= 1e-10);
    const MatrixXd n = m + 0.3 * MatrixXd::Random(15, 9);
    expect((svt(m, tau) - svt(n, tau)).norm() <= (m - n).norm() + 1e-12);
  }

  for (int trial = 0; trial < 6; ++trial) {
    const LowRankSparseProblem p = make_low_rank_sparse(60, 40, 2, 0.02, 3.0, 100 + trial);
    RpcaConfig cfg;
    cfg.lambda = 1.0 / std::sqrt(60.0);
    cfg.tol = 1e-7;
    for (const RpcaResult& r : {rpca_ialm(p.d, cfg), rpca_apg(p.d, cfg)}) {
      expect(r.diagnostics.converged);
      expect((p.d - r.background - r.target).norm() / p.d.norm() <= cfg.tol);
    }
    cfg.energy_ratio = 0.1;
    cfg.nonneg_target = true;
    const RpcaResult nn = rpca_ialm(p.d, cfg);
    expect(nn.target.minCoeff() >= 0.0);
    expect((p.d - nn.background - nn.target).norm() / p.d.norm() <= 1e-6);
  }
  {
    const TensorProblem tp = make_low_rank_tensor(12, 12, 20, 1, 2.0, 4);
    TensorRpcaConfig tc;
    tc.lambda = 0.3 / std::sqrt(12.0);
    tc.stop_rule = StopRule::ResidualOnly;
    const TensorRpcaResult r = tensor_rpca(tp.d, tc);
    expect(r.diagnostics.solver.converged);
    double res = 0.0;
    for (std::size_t i = 0; i < tp.d.size(); ++i) {
      const double e = tp.d.data()[i] - r.background.data()[i] - r.target.data()[i];
      res += e * e;
    }
    expect(std::sqrt(res) / tp.d.frobenius_norm() <= 1e-6);
  }
  return {failures == 0, fmt("%d/%d property checks hold (patch round trips, unfoldings, proximal operators, "
                             "D = B + T residuals)",
                             checks - failures, checks)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  int only = 0;
  app.add_option("--criterion", only, "Run a single criterion (1-9)")->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);
  configure_threads_from_env();

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"MPCM acceleration", mpcm_acceleration},   {"IALM vs APG", ialm_vs_apg},
      {"RIPT early stop", ript_early_stop},       {"ACM gradient suite", gradient_suite},
      {"parameter budget", parameter_budget},     {"backbone plan", backbone},
      {"metric identities", metric_identities},   {"end-to-end desk detection", desk_detection},
      {"round-trip and solver invariants", invariants}};

  bool all = true;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    if (only && static_cast<int>(k + 1) != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %zu (%s): %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}

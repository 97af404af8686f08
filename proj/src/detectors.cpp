#include "irstd/detectors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace irstd {

namespace {

// Neighbor-cell directions ordered around the ring, so i and i + 4 are
// opposite cells.
constexpr int kRingY[8] = {-1, -1, -1, 0, 1, 1, 1, 0};
constexpr int kRingX[8] = {-1, 0, 1, 1, 1, 0, -1, -1};

double cell_mean(const GrayImage& img, int cy, int cx, int n, BorderMode border) {
  const int r = n / 2;
  double acc = 0.0;
  for (int a = -r; a <= r; ++a)
    for (int b = -r; b <= r; ++b) acc += img.at(cy + a, cx + b, border);
  return acc / (static_cast<double>(n) * n);
}

double pair_min(const double (&d)[8]) {
  double best = d[0] * d[4];
  for (int i = 1; i < 4; ++i) best = std::min(best, d[i] * d[i + 4]);
  return best;
}

void check_scales_fit(const GrayImage& img, const MpcmConfig& cfg) {
  cfg.validate();
  for (int n : cfg.scales)
    if (n >= img.height() || n >= img.width())
      throw std::invalid_argument("mpcm: scale " + std::to_string(n) + " too large for the image");
}

void finish_mpcm(GrayImage& out, const MpcmConfig& cfg) {
  if (cfg.clamp_negative)
    for (double& v : out.pixels()) v = std::max(v, 0.0);
}

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

class StageTimer {
 public:
  explicit StageTimer(Detection& d) : det_(d), start_(Clock::now()) {}
  void mark(std::string name) {
    const double ms = elapsed_ms(start_);
    det_.timing.push_back({std::move(name), ms});
    det_.total_ms += ms;
    start_ = Clock::now();
  }

 private:
  Detection& det_;
  Clock::time_point start_;
};

void clamp_nonnegative(GrayImage& img) {
  for (double& v : img.pixels()) v = std::max(v, 0.0);
}

}  // namespace

void MpcmConfig::validate() const {
  if (scales.empty()) throw std::invalid_argument("mpcm: at least one scale is required");
  for (int n : scales)
    if (n < 1 || n % 2 == 0) throw std::invalid_argument("mpcm: scales must be odd and >= 1");
}

GrayImage mpcm_naive(const GrayImage& img, const MpcmConfig& cfg) {
  check_scales_fit(img, cfg);
  const int h = img.height(), w = img.width();
  GrayImage out(h, w, -HUGE_VAL);
  for (int n : cfg.scales) {
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double center = cell_mean(img, y, x, n, cfg.border);
        double d[8];
        for (int i = 0; i < 8; ++i) {
          const int cy = resolve_index(y + n * kRingY[i], h, cfg.border);
          const int cx = resolve_index(x + n * kRingX[i], w, cfg.border);
          d[i] = center - cell_mean(img, cy, cx, n, cfg.border);
        }
        out(y, x) = std::max(out(y, x), pair_min(d));
      }
    }
  }
  finish_mpcm(out, cfg);
  return out;
}

GrayImage mpcm_shifted(const GrayImage& img, const MpcmConfig& cfg) {
  check_scales_fit(img, cfg);
  const int h = img.height(), w = img.width();
  GrayImage out(h, w, -HUGE_VAL);
  std::vector<GrayImage> neighbors(8);
  for (int n : cfg.scales) {
    const GrayImage means = box_mean(img, n, cfg.border);
    for (int i = 0; i < 8; ++i) neighbors[i] = shift(means, n * kRingY[i], n * kRingX[i], cfg.border);
    const auto m0 = means.pixels();
    auto o = out.pixels();
    const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(o.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t p = 0; p < count; ++p) {
      double d[8];
      for (int i = 0; i < 8; ++i) d[i] = m0[p] - neighbors[i].pixels()[p];
      o[p] = std::max(o[p], pair_min(d));
    }
  }
  finish_mpcm(out, cfg);
  return out;
}

double patch_image_lambda(double L, Eigen::Index rows, Eigen::Index cols) {
  if (!(L > 0.0) || rows < 1 || cols < 1) throw std::invalid_argument("patch_image_lambda: need L > 0 and nonempty dims");
  return L / std::sqrt(static_cast<double>(std::min(rows, cols)));
}

double patch_tensor_lambda(double L, int d0, int d1, int d2) {
  if (!(L > 0.0) || std::min({d0, d1, d2}) < 1)
    throw std::invalid_argument("patch_tensor_lambda: need L > 0 and nonempty dims");
  return L / std::sqrt(static_cast<double>(std::min({d0, d1, d2})));
}

nlohmann::json to_json(const Detection& d) {
  nlohmann::json timing = nlohmann::json::array();
  for (const auto& s : d.timing) timing.push_back({{"stage", s.stage}, {"ms", s.ms}});
  nlohmann::json j = {{"height", d.saliency.height()},
                      {"width", d.saliency.width()},
                      {"threshold", d.threshold},
                      {"mask_pixels", d.mask.count()},
                      {"timing", timing},
                      {"total_ms", d.total_ms},
                      {"converged", d.converged}};
  if (d.lambda) j["lambda"] = *d.lambda;
  if (d.solver) j["solver"] = *d.solver;
  return j;
}

Detection detect_mpcm(const GrayImage& img, const MpcmConfig& cfg, bool naive) {
  Detection det;
  StageTimer timer(det);
  det.saliency = naive ? mpcm_naive(img, cfg) : mpcm_shifted(img, cfg);
  timer.mark("saliency");
  det.threshold = adaptive_threshold_value(det.saliency, cfg.k);
  det.mask = binarize(det.saliency, det.threshold);
  timer.mark("threshold");
  return det;
}

Detection detect_tophat(const GrayImage& img, const TophatConfig& cfg) {
  Detection det;
  StageTimer timer(det);
  det.saliency = white_tophat(img, cfg.se_size, cfg.border);
  timer.mark("tophat");
  det.threshold = adaptive_threshold_value(det.saliency, cfg.k, cfg.v_min);
  det.mask = binarize(det.saliency, det.threshold);
  timer.mark("threshold");
  return det;
}

namespace {

template <typename Cfg>
Detection detect_patch_image(const GrayImage& img, const Cfg& cfg) {
  Detection det;
  StageTimer timer(det);
  const PatchMatrix pm = patchify(img, cfg.patch);
  timer.mark("patchify");
  RpcaConfig solver = cfg.solver;
  solver.lambda = patch_image_lambda(cfg.L, pm.data.rows(), pm.data.cols());
  det.lambda = solver.lambda;
  const RpcaResult r = rpca_ialm(pm.data, solver);
  timer.mark("separation");
  det.saliency = unpatchify(r.target, pm.layout, Reducer::Mean);
  clamp_nonnegative(det.saliency);
  timer.mark("reconstruct");
  det.threshold = adaptive_threshold_value(det.saliency, cfg.k, cfg.v_min);
  det.mask = binarize(det.saliency, det.threshold);
  timer.mark("threshold");
  det.solver = to_json(r.diagnostics);
  det.converged = r.diagnostics.converged;
  return det;
}

}  // namespace

Detection detect_ipi(const GrayImage& img, const IpiConfig& cfg) { return detect_patch_image(img, cfg); }

Detection detect_nipps(const GrayImage& img, const NippsConfig& cfg) { return detect_patch_image(img, cfg); }

Detection detect_ript(const GrayImage& img, const RiptConfig& cfg) {
  Detection det;
  StageTimer timer(det);
  const PatchTensor pt = patch_tensor(img, cfg.patch);
  timer.mark("patchify");
  TensorRpcaConfig solver = cfg.solver;
  solver.lambda = patch_tensor_lambda(cfg.L, pt.data.dim(0), pt.data.dim(1), pt.data.dim(2));
  det.lambda = solver.lambda;
  const TensorRpcaResult r = tensor_rpca(pt.data, solver);
  timer.mark("separation");
  det.saliency = fold_tensor(r.target, pt.layout, Reducer::Mean);
  clamp_nonnegative(det.saliency);
  timer.mark("reconstruct");
  det.threshold = adaptive_threshold_value(det.saliency, cfg.k, cfg.v_min);
  det.mask = binarize(det.saliency, det.threshold);
  timer.mark("threshold");
  det.solver = to_json(r.diagnostics);
  det.converged = r.diagnostics.solver.converged;
  return det;
}

const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names = {"tophat", "mpcm", "mpcm-naive", "ipi", "nipps", "ript"};
  return names;
}

namespace {

using nlohmann::json;

void check_keys(const json& j, const char* section, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw std::invalid_argument(std::string("config section '") + section + "' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw std::invalid_argument(std::string("unknown key '") + it.key() + "' in config section '" + section + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

BorderMode parse_border(const std::string& s) {
  if (s == "replicate") return BorderMode::Replicate;
  if (s == "cyclic") return BorderMode::Cyclic;
  throw std::invalid_argument("border must be 'replicate' or 'cyclic'");
}

const char* border_name(BorderMode b) { return b == BorderMode::Replicate ? "replicate" : "cyclic"; }

void read_patch(const json& j, PatchConfig& p) {
  read(j, "patch_size", p.patch_size);
  read(j, "stride", p.stride);
  read(j, "boundary_anchor", p.boundary_anchor);
}

void read_rpca(const json& j, RpcaConfig& s) {
  read(j, "epsilon", s.tol);
  read(j, "max_iter", s.max_iter);
  read(j, "rho", s.rho);
  read(j, "mu0", s.mu0);
}

json patch_json(const PatchConfig& p) {
  return {{"patch_size", p.patch_size}, {"stride", p.stride}, {"boundary_anchor", p.boundary_anchor}};
}

}  // namespace

DetectorSuite DetectorSuite::from_json(const json& j) {
  DetectorSuite s;
  if (j.is_null()) return s;
  check_keys(j, "root", {"mpcm", "tophat", "ipi", "nipps", "ript"});
  try {
    if (j.contains("mpcm")) {
      const json& m = j["mpcm"];
      check_keys(m, "mpcm", {"scales", "border", "clamp_negative", "k"});
      read(m, "scales", s.mpcm.scales);
      if (m.contains("border")) s.mpcm.border = parse_border(m["border"].get<std::string>());
      read(m, "clamp_negative", s.mpcm.clamp_negative);
      read(m, "k", s.mpcm.k);
      s.mpcm.validate();
    }
    if (j.contains("tophat")) {
      const json& m = j["tophat"];
      check_keys(m, "tophat", {"se_size", "k", "v_min", "border"});
      read(m, "se_size", s.tophat.se_size);
      read(m, "k", s.tophat.k);
      read(m, "v_min", s.tophat.v_min);
      if (m.contains("border")) s.tophat.border = parse_border(m["border"].get<std::string>());
    }
    if (j.contains("ipi")) {
      const json& m = j["ipi"];
      check_keys(m, "ipi", {"patch_size", "stride", "boundary_anchor", "L", "k", "v_min", "epsilon", "max_iter", "rho", "mu0"});
      read_patch(m, s.ipi.patch);
      read(m, "L", s.ipi.L);
      read(m, "k", s.ipi.k);
      read(m, "v_min", s.ipi.v_min);
      read_rpca(m, s.ipi.solver);
    }
    if (j.contains("nipps")) {
      const json& m = j["nipps"];
      check_keys(m, "nipps", {"patch_size", "stride", "boundary_anchor", "L", "k", "v_min", "epsilon", "max_iter", "rho",
                              "mu0", "r", "energy", "nonneg_target"});
      read_patch(m, s.nipps.patch);
      read(m, "L", s.nipps.L);
      read(m, "k", s.nipps.k);
      read(m, "v_min", s.nipps.v_min);
      read_rpca(m, s.nipps.solver);
      read(m, "r", s.nipps.solver.energy_ratio);
      read(m, "nonneg_target", s.nipps.solver.nonneg_target);
      if (m.contains("energy")) {
        const auto e = m["energy"].get<std::string>();
        if (e != "singular" && e != "squared") throw std::invalid_argument("nipps.energy must be 'singular' or 'squared'");
        s.nipps.solver.energy_measure = e == "squared" ? EnergyMeasure::Squared : EnergyMeasure::Singular;
      }
    }
    if (j.contains("ript")) {
      const json& m = j["ript"];
      check_keys(m, "ript", {"patch_size", "stride", "boundary_anchor", "L", "k", "v_min", "h", "epsilon_w", "epsilon",
                             "max_iter", "support_patience", "stop", "rho", "mu0"});
      read_patch(m, s.ript.patch);
      read(m, "L", s.ript.L);
      read(m, "k", s.ript.k);
      read(m, "v_min", s.ript.v_min);
      auto& t = s.ript.solver;
      read(m, "h", t.h);
      if (m.contains("epsilon_w")) {
        t.reweight_eps = m["epsilon_w"].get<double>();
        t.support_threshold = t.reweight_eps;
      }
      read(m, "epsilon", t.tol);
      read(m, "max_iter", t.max_iter);
      read(m, "support_patience", t.support_patience);
      read(m, "rho", t.rho);
      read(m, "mu0", t.mu0);
      if (m.contains("stop")) {
        const auto stop = m["stop"].get<std::string>();
        if (stop == "support")
          t.stop_rule = StopRule::SupportOrResidual;
        else if (stop == "residual")
          t.stop_rule = StopRule::ResidualOnly;
        else
          throw std::invalid_argument("ript.stop must be 'support' or 'residual'");
      }
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed detector config: ") + e.what());
  }
  return s;
}

json DetectorSuite::to_json() const {
  json j;
  j["mpcm"] = {{"scales", mpcm.scales}, {"border", border_name(mpcm.border)}, {"clamp_negative", mpcm.clamp_negative}, {"k", mpcm.k}};
  j["tophat"] = {{"se_size", tophat.se_size}, {"k", tophat.k}, {"v_min", tophat.v_min}, {"border", border_name(tophat.border)}};
  auto rpca = [](json base, const RpcaConfig& c) {
    base["epsilon"] = c.tol;
    base["max_iter"] = c.max_iter;
    base["rho"] = c.rho;
    return base;
  };
  json ipi_j = patch_json(ipi.patch);
  ipi_j.update({{"L", ipi.L}, {"k", ipi.k}, {"v_min", ipi.v_min}});
  j["ipi"] = rpca(ipi_j, ipi.solver);
  json nipps_j = patch_json(nipps.patch);
  nipps_j.update({{"L", nipps.L}, {"k", nipps.k}, {"v_min", nipps.v_min}, {"r", nipps.solver.energy_ratio},
                  {"energy", nipps.solver.energy_measure == EnergyMeasure::Squared ? "squared" : "singular"},
                  {"nonneg_target", nipps.solver.nonneg_target}});
  j["nipps"] = rpca(nipps_j, nipps.solver);
  json ript_j = patch_json(ript.patch);
  ript_j.update({{"L", ript.L}, {"k", ript.k}, {"v_min", ript.v_min}, {"h", ript.solver.h},
                 {"epsilon_w", ript.solver.reweight_eps}, {"epsilon", ript.solver.tol},
                 {"max_iter", ript.solver.max_iter}, {"support_patience", ript.solver.support_patience},
                 {"rho", ript.solver.rho},
                 {"stop", ript.solver.stop_rule == StopRule::ResidualOnly ? "residual" : "support"}});
  j["ript"] = ript_j;
  return j;
}

Detection DetectorSuite::run(const std::string& method, const GrayImage& img) const {
  if (method == "tophat") return detect_tophat(img, tophat);
  if (method == "mpcm") return detect_mpcm(img, mpcm, false);
  if (method == "mpcm-naive") return detect_mpcm(img, mpcm, true);
  if (method == "ipi") return detect_ipi(img, ipi);
  if (method == "nipps") return detect_nipps(img, nipps);
  if (method == "ript") return detect_ript(img, ript);
  throw std::invalid_argument("unknown method: " + method);
}

}  // namespace irstd

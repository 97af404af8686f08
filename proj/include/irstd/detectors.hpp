#pragma once

#include <json.hpp>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "irstd/image.hpp"
#include "irstd/imgproc.hpp"
#include "irstd/lowrank.hpp"

namespace irstd {

// ---------------------------------------------------------------------------
// Multiscale patch-based contrast measure
// ---------------------------------------------------------------------------

struct MpcmConfig {
  std::vector<int> scales = {1, 3, 5, 7, 9};
  BorderMode border = BorderMode::Replicate;
  bool clamp_negative = true;
  double k = 3.0;  // threshold factor for the mask

  void validate() const;
};

/// Baseline: every neighbor-cell mean is summed per pixel. The eight cells
/// sit N pixels away from the center cell; their centers are resolved by
/// the border rule before averaging so both implementations agree.
GrayImage mpcm_naive(const GrayImage& img, const MpcmConfig& cfg);

/// Same map from one box mean per scale plus eight whole-map shifts.
GrayImage mpcm_shifted(const GrayImage& img, const MpcmConfig& cfg);

// ---------------------------------------------------------------------------
// Detector configs. Defaults follow the published hyper-parameter table
// except RIPT's L, which is rescaled for the absent structure prior.
// ---------------------------------------------------------------------------

struct IpiConfig {
  PatchConfig patch{};
  double L = 4.5;
  double k = 10.0;
  double v_min = 0.0;
  RpcaConfig solver{};  // lambda is derived from L and the patch-image dims
};

struct NippsConfig {
  PatchConfig patch{};
  double L = 2.0;
  double k = 10.0;
  double v_min = 0.0;
  RpcaConfig solver = [] {
    RpcaConfig c;
    c.energy_ratio = 0.11;
    c.energy_measure = EnergyMeasure::Squared;
    c.nonneg_target = true;
    return c;
  }();
};

struct RiptConfig {
  PatchConfig patch{};
  double L = 0.005;  // table value 0.001 assumes the structure-prior weights
  double k = 10.0;
  double v_min = 0.0;
  TensorRpcaConfig solver{};  // lambda is derived from L and the tensor dims
};

struct TophatConfig {
  int se_size = 11;
  double k = 3.0;
  double v_min = 0.0;
  BorderMode border = BorderMode::Replicate;
};

/// lambda = L / sqrt(min(m, n)) of a patch-image.
double patch_image_lambda(double L, Eigen::Index rows, Eigen::Index cols);
/// lambda = L / sqrt(min(I, J, P)) of a patch tensor.
double patch_tensor_lambda(double L, int d0, int d1, int d2);

struct StageTiming {
  std::string stage;
  double ms = 0.0;
};

struct Detection {
  GrayImage saliency;
  BinaryMask mask;
  double threshold = 0.0;
  std::vector<StageTiming> timing;
  double total_ms = 0.0;
  std::optional<double> lambda;
  std::optional<nlohmann::json> solver;  // solver diagnostics when applicable
  bool converged = true;
};

nlohmann::json to_json(const Detection& d);

Detection detect_mpcm(const GrayImage& img, const MpcmConfig& cfg = {}, bool naive = false);
Detection detect_tophat(const GrayImage& img, const TophatConfig& cfg = {});
Detection detect_ipi(const GrayImage& img, const IpiConfig& cfg = {});
Detection detect_nipps(const GrayImage& img, const NippsConfig& cfg = {});
Detection detect_ript(const GrayImage& img, const RiptConfig& cfg = {});

/// Methods reachable by name: tophat, mpcm, mpcm-naive, ipi, nipps, ript.
const std::vector<std::string>& method_names();

/// Per-method settings loaded from a JSON config. Keys follow the
/// hyper-parameter table, e.g. {"ipi": {"patch_size":50, "stride":10,
/// "L":4.5, "k":10, "epsilon":1e-7}}. Missing keys keep their defaults.
struct DetectorSuite {
  MpcmConfig mpcm;
  TophatConfig tophat;
  IpiConfig ipi;
  NippsConfig nipps;
  RiptConfig ript;

  static DetectorSuite from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  /// Throws std::invalid_argument for an unknown method name.
  Detection run(const std::string& method, const GrayImage& img) const;
};

}  // namespace irstd

#pragma once

#include <Eigen/Dense>
#include <json.hpp>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace irstd::acm {

/// Dense N x C x H x W array, row-major (w fastest).
class Tensor4 {
 public:
  Tensor4() = default;
  Tensor4(int n, int c, int h, int w, double fill = 0.0);

  int n() const noexcept { return n_; }
  int c() const noexcept { return c_; }
  int h() const noexcept { return h_; }
  int w() const noexcept { return w_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool same_shape(const Tensor4& o) const noexcept { return n_ == o.n_ && c_ == o.c_ && h_ == o.h_ && w_ == o.w_; }

  double& operator()(int n, int c, int h, int w) noexcept { return data_[index(n, c, h, w)]; }
  double operator()(int n, int c, int h, int w) const noexcept { return data_[index(n, c, h, w)]; }
  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  bool all_finite() const noexcept;

 private:
  std::size_t index(int n, int c, int h, int w) const noexcept {
    return ((static_cast<std::size_t>(n) * c_ + c) * h_ + h) * w_ + w;
  }
  int n_ = 0, c_ = 0, h_ = 0, w_ = 0;
  std::vector<double> data_;
};

enum class Mode { Train, Inference };

constexpr double kBatchNormEps = 1e-5;

struct BatchNormParams {
  Eigen::VectorXd gamma, beta;
  Eigen::VectorXd running_mean, running_var;  // consumed in Inference mode

  static BatchNormParams identity(int features);
};

enum class GateKind { Global, PointWise };

/// Two-layer channel attention: sigmoid(BN(W2 relu(BN(W1 x)))). Global
/// gates see the spatially pooled input (one value per sample and channel);
/// point-wise gates apply W1, W2 as 1x1 convolutions at every pixel.
struct AttentionParams {
  GateKind kind = GateKind::PointWise;
  Eigen::MatrixXd w1;  // hidden x C
  Eigen::MatrixXd w2;  // C x hidden
  BatchNormParams bn1, bn2;

  int channels() const noexcept { return static_cast<int>(w1.cols()); }
  int hidden() const noexcept { return static_cast<int>(w1.rows()); }
  std::size_t weight_count() const noexcept { return static_cast<std::size_t>(w1.size() + w2.size()); }
  void validate() const;
};

/// Global gate with C/r hidden units; C must be divisible by r.
AttentionParams make_gcam_params(int channels, int reduction = 4);
/// Point-wise gate with C/4 hidden units.
AttentionParams make_pcam_params(int channels);

enum class WeightInit { Zero, Uniform, He };

/// Fill weights. Uniform draws from (-scale, scale) for weights and BN
/// shifts, with gamma = 1 + U(-scale, scale); He draws N(0, 2 / fan_in)
/// and leaves BN at identity.
void initialize(AttentionParams& p, WeightInit init, std::mt19937_64& rng, double scale = 0.1);

/// Channelwise spatial mean, N x C.
Eigen::MatrixXd global_avg_pool(const Tensor4& y);

/// Gate as N x C x 1 x 1.
Tensor4 gcam_gate(const Tensor4& y, const AttentionParams& p, Mode mode);
/// Gate with the shape of x.
Tensor4 pcam_gate(const Tensor4& x, const AttentionParams& p, Mode mode);

// ---------------------------------------------------------------------------
// Cross-layer fusion
// ---------------------------------------------------------------------------

enum class ModulationVariant { TopDownLocal, BiLocal, BiGlobal, ACM };

const char* variant_name(ModulationVariant v);
ModulationVariant parse_variant(const std::string& name);
const std::vector<ModulationVariant>& all_variants();

/// `first` and `second` are the two attention gates of a variant:
///   ACM          Z = G(Y) * X + L(X) * Y        first = G (global), second = L
///   BiLocal      Z = L1(Y) * X + L2(X) * Y      first = L1, second = L2
///   BiGlobal     Z = G1(Y) * X + G2(X) * Y      first = G1, second = G2
///   TopDownLocal Z = Lb(La(Y) * Y) * X + Y      first = La, second = Lb
struct FusionParams {
  ModulationVariant variant = ModulationVariant::ACM;
  AttentionParams first, second;

  int channels() const noexcept { return first.channels(); }
  void validate() const;
};

FusionParams make_fusion_params(ModulationVariant variant, int channels);

/// Attention weight-matrix entries (no BN affine terms).
std::size_t param_count(ModulationVariant variant, int channels);

struct AttentionGrads {
  Eigen::MatrixXd w1, w2;
  Eigen::VectorXd gamma1, beta1, gamma2, beta2;
};

struct FusionGrads {
  Tensor4 dx, dy;
  AttentionGrads first, second;
};

/// One forward/backward pair over a fusion block. forward() records the
/// intermediates backward() needs.
class FusionGraph {
 public:
  FusionGraph(FusionParams params, Mode mode);

  Tensor4 forward(const Tensor4& x, const Tensor4& y);

  /// Reverse-mode gradients of sum(upstream * Z). With freeze_gates the
  /// gates are treated as constants and their parameter grads are zero.
  /// Throws StateError if forward() has not run.
  FusionGrads backward(const Tensor4& upstream, bool freeze_gates = false) const;

  const FusionParams& params() const noexcept { return params_; }
  FusionParams& mutable_params() noexcept { return params_; }
  Mode mode() const noexcept { return mode_; }

  /// Gates from the last forward (first gate is N x C x 1 x 1 when global).
  const Tensor4& first_gate() const;
  const Tensor4& second_gate() const;

  struct Recorded;

 private:
  FusionParams params_;
  Mode mode_;
  std::shared_ptr<Recorded> rec_;
};

/// Stateless forward.
Tensor4 fuse(const Tensor4& x, const Tensor4& y, const FusionParams& params, Mode mode);

/// The bottom-up modulated high-level feature Y' = L(X) * Y.
Tensor4 modulate_high_level(const Tensor4& x, const Tensor4& y, const AttentionParams& pcam, Mode mode);

/// Combine step of each variant with precomputed gates (no gate evaluation).
/// TopDownLocal expects `first` to be Lb's output.
Tensor4 combine_with_gates(ModulationVariant variant, const Tensor4& x, const Tensor4& y, const Tensor4& first,
                           const Tensor4& second);

// ---------------------------------------------------------------------------
// Loss, gradient checking, serialization, backbone planning
// ---------------------------------------------------------------------------

constexpr double kSoftIouEps = 1e-6;

struct LossWithGrad {
  double loss = 0.0;
  Tensor4 grad;
};

/// 1 - sum(p g) / (sum p + sum g - sum(p g) + eps).
LossWithGrad soft_iou_loss(const Tensor4& pred, const Tensor4& gt);

struct GradCheckEntry {
  std::string tensor;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t entries = 0;
};

struct GradCheckReport {
  ModulationVariant variant{};
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;
};

struct GradCheckOptions {
  int n = 2, c = 8, h = 5, w = 5;
  double step = 1e-6;
  std::uint64_t seed = 7;
  Mode mode = Mode::Train;
};

/// Central differences of sum(R * Z) against FusionGraph::backward for X, Y
/// and every parameter tensor. Relative error of an entry is
/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-6).
GradCheckReport gradient_check(ModulationVariant variant, const GradCheckOptions& opt = {});
nlohmann::json to_json(const GradCheckReport& r);

nlohmann::json to_json(const AttentionParams& p);
AttentionParams attention_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FusionParams& p);
FusionParams fusion_from_json(const nlohmann::json& j);

struct StagePlan {
  std::string name;
  int height = 0, width = 0, channels = 0;
  int conv_layers = 0;
  bool downsample = false;  // stride 2 at the first convolution
};

struct BackbonePlan {
  int blocks = 0;
  std::vector<StagePlan> stages;
  int weight_layer_count = 0;
};

BackbonePlan backbone_plan(int blocks, int input_size = 480);
nlohmann::json to_json(const BackbonePlan& p);

}  // namespace irstd::acm

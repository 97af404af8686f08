#pragma once

#include <Eigen/Dense>
#include <json.hpp>
#include <vector>

#include "irstd/imgproc.hpp"

namespace irstd {

// ---------------------------------------------------------------------------
// Proximal operators
// ---------------------------------------------------------------------------

/// Entrywise sign(m) * max(|m| - tau, 0).
Eigen::MatrixXd soft_threshold(const Eigen::MatrixXd& m, double tau);

/// Thin SVD. Tall and wide inputs are first reduced by a Householder QR so
/// the divide-and-conquer SVD only sees a square factor.
struct Svd {
  Eigen::MatrixXd u;
  Eigen::VectorXd s;  // nonincreasing
  Eigen::MatrixXd v;
};
Svd thin_svd(const Eigen::MatrixXd& m);

/// U soft(S, tau) V^T.
Eigen::MatrixXd svt(const Eigen::MatrixXd& m, double tau);

/// What is summed when measuring spectral energy: sigma_i or sigma_i^2.
enum class EnergyMeasure { Singular, Squared };

/// Smallest r0 whose leading mass reaches (1 - ratio) of the total; 0 for
/// an all-zero spectrum.
int energy_rank(const Eigen::VectorXd& singulars, double ratio,
                EnergyMeasure measure = EnergyMeasure::Singular);

/// Leaves the top r0 singular values untouched and soft-thresholds the rest.
Eigen::MatrixXd partial_svt(const Eigen::MatrixXd& m, double tau, int r0);

// ---------------------------------------------------------------------------
// Robust PCA: D = B (low rank) + T (sparse)
// ---------------------------------------------------------------------------

struct RpcaConfig {
  double lambda = 0.0;        // must be set by the caller
  double mu0 = 0.0;           // <= 0 selects 1.25 / sigma_max(D)
  double rho = 1.5;
  double mu_max_factor = 1e7; // mu_max = factor * mu0
  double tol = 1e-7;
  int max_iter = 1000;
  bool nonneg_target = false;
  double energy_ratio = 0.0;  // > 0 selects the partial-sum singular value step
  EnergyMeasure energy_measure = EnergyMeasure::Singular;

  void validate() const;
};

struct SolverDiagnostics {
  int iterations = 0;
  int svd_count = 0;
  std::vector<double> residual_trace;
  bool converged = false;
  bool early_stopped = false;
};

nlohmann::json to_json(const SolverDiagnostics& d);

struct RpcaResult {
  Eigen::MatrixXd background;
  Eigen::MatrixXd target;
  SolverDiagnostics diagnostics;
};

/// Inexact augmented Lagrange multiplier method.
RpcaResult rpca_ialm(const Eigen::MatrixXd& d, const RpcaConfig& cfg);

struct ApgConfig {
  double eta = 0.9;             // continuation decay of the smoothing weight
  double mu_bar_factor = 1e-9;  // mu_bar = factor * mu_0
  int max_iter = 5000;
};

/// Accelerated proximal gradient on the penalized relaxation, with Nesterov
/// extrapolation and continuation. Uses cfg.lambda, cfg.tol and the same
/// relative residual stopping test as rpca_ialm; cfg.max_iter is ignored in
/// favour of apg.max_iter.
RpcaResult rpca_apg(const Eigen::MatrixXd& d, const RpcaConfig& cfg, const ApgConfig& apg = {});

// ---------------------------------------------------------------------------
// Tensor robust PCA with reweighted l1 and support-stability stopping.
// ---------------------------------------------------------------------------

enum class StopRule { ResidualOnly, SupportOrResidual };

struct TensorRpcaConfig {
  double lambda = 0.0;
  double alpha[3] = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  double tol = 1e-7;
  double support_threshold = 0.01;  // |T| above this counts as support
  int support_patience = 1;
  double reweight_eps = 0.01;
  bool reweight = true;
  double mu0 = 0.0;  // <= 0 selects 1.25 / sigma_max of the widest unfolding
  double rho = 1.5;
  double mu_max_factor = 1e7;
  int max_iter = 500;
  double h = 0.1;  // reserved, not used by any step
  StopRule stop_rule = StopRule::SupportOrResidual;
  /// Keep iterating after the support rule fires, only to record when the
  /// residual test alone would have stopped. The returned tensors are
  /// still the early-stop state.
  bool probe_residual_stop = false;

  void validate() const;
};

struct TensorDiagnostics {
  SolverDiagnostics solver;
  int early_stop_iteration = -1;     // -1: support rule never fired
  int residual_stop_iteration = -1;  // -1: not reached / not probed
  std::vector<std::size_t> support_trace;
};

nlohmann::json to_json(const TensorDiagnostics& d);

struct TensorRpcaResult {
  Tensor3 background;
  Tensor3 target;
  TensorDiagnostics diagnostics;
};

TensorRpcaResult tensor_rpca(const Tensor3& d, const TensorRpcaConfig& cfg);

}  // namespace irstd

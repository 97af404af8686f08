#include "irstd/lowrank.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "irstd/error.hpp"

namespace irstd {

Eigen::MatrixXd soft_threshold(const Eigen::MatrixXd& m, double tau) {
  if (!(tau >= 0.0)) throw std::invalid_argument("soft_threshold: tau must be >= 0");
  return m.unaryExpr([tau](double v) {
    const double a = std::abs(v) - tau;
    return a > 0.0 ? std::copysign(a, v) : 0.0;
  });
}

namespace {

Svd square_or_tall_svd(const Eigen::MatrixXd& m) {
  const Eigen::Index rows = m.rows(), cols = m.cols();
  Svd out;
  if (rows > cols) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    const Eigen::MatrixXd r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(r, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw NumericError("SVD did not converge");
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(rows, cols);
    u.topRows(cols) = svd.matrixU();
    u.applyOnTheLeft(qr.householderQ());
    out.u = std::move(u);
    out.s = svd.singularValues();
    out.v = svd.matrixV();
  } else {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw NumericError("SVD did not converge");
    out.u = svd.matrixU();
    out.s = svd.singularValues();
    out.v = svd.matrixV();
  }
  if (!out.s.allFinite() || !out.u.allFinite() || !out.v.allFinite())
    throw NumericError("SVD produced non-finite factors");
  return out;
}

Eigen::MatrixXd compose(const Svd& svd, const Eigen::VectorXd& s) {
  // Shrinkage keeps the spectrum nonincreasing, so the nonzero values form a prefix.
  Eigen::Index k = 0;
  while (k < s.size() && s(k) > 0.0) ++k;
  if (k == 0) return Eigen::MatrixXd::Zero(svd.u.rows(), svd.v.rows());
  return svd.u.leftCols(k) * s.head(k).asDiagonal() * svd.v.leftCols(k).transpose();
}

Eigen::VectorXd shrink_singulars(const Eigen::VectorXd& s, double tau, int keep) {
  Eigen::VectorXd out = s;
  for (Eigen::Index i = keep; i < s.size(); ++i) out(i) = std::max(s(i) - tau, 0.0);
  return out;
}

}  // namespace

Svd thin_svd(const Eigen::MatrixXd& m) {
  if (m.size() == 0) throw std::invalid_argument("thin_svd: empty matrix");
  if (!m.allFinite()) throw NumericError("thin_svd: non-finite input");
  if (m.rows() >= m.cols()) return square_or_tall_svd(m);
  Svd t = square_or_tall_svd(m.transpose());
  std::swap(t.u, t.v);
  return t;
}

Eigen::MatrixXd svt(const Eigen::MatrixXd& m, double tau) {
  if (!(tau >= 0.0)) throw std::invalid_argument("svt: tau must be >= 0");
  const Svd svd = thin_svd(m);
  return compose(svd, shrink_singulars(svd.s, tau, 0));
}

int energy_rank(const Eigen::VectorXd& singulars, double ratio, EnergyMeasure measure) {
  if (!(ratio >= 0.0 && ratio < 1.0)) throw std::invalid_argument("energy_rank: ratio must be in [0,1)");
  double total = 0.0;
  for (Eigen::Index i = 0; i < singulars.size(); ++i) {
    if (singulars(i) < 0.0) throw std::invalid_argument("energy_rank: negative singular value");
    if (i > 0 && singulars(i) > singulars(i - 1))
      throw std::invalid_argument("energy_rank: singular values must be nonincreasing");
    total += measure == EnergyMeasure::Squared ? singulars(i) * singulars(i) : singulars(i);
  }
  if (total == 0.0) return 0;
  const double target = (1.0 - ratio) * total;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < singulars.size(); ++i) {
    acc += measure == EnergyMeasure::Squared ? singulars(i) * singulars(i) : singulars(i);
    if (acc >= target) return static_cast<int>(i + 1);
  }
  return static_cast<int>(singulars.size());
}

Eigen::MatrixXd partial_svt(const Eigen::MatrixXd& m, double tau, int r0) {
  if (!(tau >= 0.0)) throw std::invalid_argument("partial_svt: tau must be >= 0");
  if (r0 < 0 || r0 > std::min(m.rows(), m.cols()))
    throw std::invalid_argument("partial_svt: r0 must lie in [0, min(dims)]");
  const Svd svd = thin_svd(m);
  return compose(svd, shrink_singulars(svd.s, tau, r0));
}

void RpcaConfig::validate() const {
  if (!(lambda > 0.0)) throw std::invalid_argument("RpcaConfig: lambda must be > 0");
  if (!(rho > 1.0)) throw std::invalid_argument("RpcaConfig: rho must be > 1");
  if (!(tol > 0.0 && tol < 1.0)) throw std::invalid_argument("RpcaConfig: tol must be in (0,1)");
  if (max_iter < 1) throw std::invalid_argument("RpcaConfig: max_iter must be >= 1");
  if (!(mu_max_factor >= 1.0)) throw std::invalid_argument("RpcaConfig: mu_max_factor must be >= 1");
  if (!(energy_ratio >= 0.0 && energy_ratio < 1.0))
    throw std::invalid_argument("RpcaConfig: energy_ratio must be in [0,1)");
}

nlohmann::json to_json(const SolverDiagnostics& d) {
  return {{"iterations", d.iterations},
          {"svd_count", d.svd_count},
          {"residual_trace", d.residual_trace},
          {"converged", d.converged},
          {"early_stopped", d.early_stopped}};
}

nlohmann::json to_json(const TensorDiagnostics& d) {
  nlohmann::json j = to_json(d.solver);
  j["early_stop_iteration"] = d.early_stop_iteration;
  j["residual_stop_iteration"] = d.residual_stop_iteration;
  j["support_trace"] = d.support_trace;
  return j;
}

namespace {

void require_finite(const Eigen::MatrixXd& d) {
  if (d.size() == 0) throw std::invalid_argument("robust PCA: empty input");
  if (!d.allFinite()) throw std::invalid_argument("robust PCA: input contains non-finite values");
}

RpcaResult zero_result(const Eigen::MatrixXd& d) {
  RpcaResult r;
  r.background = Eigen::MatrixXd::Zero(d.rows(), d.cols());
  r.target = Eigen::MatrixXd::Zero(d.rows(), d.cols());
  r.diagnostics.iterations = 1;
  r.diagnostics.residual_trace = {0.0};
  r.diagnostics.converged = true;
  return r;
}

// Low-rank proximal step shared by both solvers: full SVT, or partial-sum
// SVT with the rank picked from the current spectrum.
Eigen::MatrixXd low_rank_step(const Eigen::MatrixXd& m, double tau, const RpcaConfig& cfg) {
  const Svd svd = thin_svd(m);
  const int keep = cfg.energy_ratio > 0.0 ? energy_rank(svd.s, cfg.energy_ratio, cfg.energy_measure) : 0;
  return compose(svd, shrink_singulars(svd.s, tau, keep));
}

void sparse_step(Eigen::MatrixXd& t, bool nonneg) {
  if (nonneg) t = t.cwiseMax(0.0);
}

}  // namespace

RpcaResult rpca_ialm(const Eigen::MatrixXd& d, const RpcaConfig& cfg) {
  cfg.validate();
  require_finite(d);
  const double norm_f = d.norm();
  if (norm_f == 0.0) return zero_result(d);

  RpcaResult res;
  auto& diag = res.diagnostics;
  const double sigma_max = thin_svd(d).s(0);
  ++diag.svd_count;
  const double scale = std::max(sigma_max, d.cwiseAbs().maxCoeff() / cfg.lambda);
  Eigen::MatrixXd y = d / scale;
  double mu = cfg.mu0 > 0.0 ? cfg.mu0 : 1.25 / sigma_max;
  const double mu_max = cfg.mu_max_factor * mu;

  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(d.rows(), d.cols());
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(d.rows(), d.cols());
  Eigen::MatrixXd z(d.rows(), d.cols());
  for (int k = 1; k <= cfg.max_iter; ++k) {
    b = low_rank_step(d - t + y / mu, 1.0 / mu, cfg);
    ++diag.svd_count;
    t = soft_threshold(d - b + y / mu, cfg.lambda / mu);
    sparse_step(t, cfg.nonneg_target);
    z = d - b - t;
    y += mu * z;
    mu = std::min(cfg.rho * mu, mu_max);

    const double r = z.norm() / norm_f;
    diag.residual_trace.push_back(r);
    diag.iterations = k;
    if (r <= cfg.tol) {
      diag.converged = true;
      break;
    }
  }
  res.background = std::move(b);
  res.target = std::move(t);
  return res;
}

RpcaResult rpca_apg(const Eigen::MatrixXd& d, const RpcaConfig& cfg, const ApgConfig& apg) {
  cfg.validate();
  if (!(apg.eta > 0.0 && apg.eta < 1.0)) throw std::invalid_argument("ApgConfig: eta must be in (0,1)");
  if (!(apg.mu_bar_factor > 0.0 && apg.mu_bar_factor <= 1.0))
    throw std::invalid_argument("ApgConfig: mu_bar_factor must be in (0,1]");
  if (apg.max_iter < 1) throw std::invalid_argument("ApgConfig: max_iter must be >= 1");
  require_finite(d);
  const double norm_f = d.norm();
  if (norm_f == 0.0) return zero_result(d);

  RpcaResult res;
  auto& diag = res.diagnostics;
  const double sigma_max = thin_svd(d).s(0);
  ++diag.svd_count;
  double mu = cfg.mu0 > 0.0 ? cfg.mu0 : 0.99 * sigma_max;
  const double mu_bar = apg.mu_bar_factor * mu;

  const Eigen::Index m = d.rows(), n = d.cols();
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(m, n), b_prev = b;
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, n), t_prev = t;
  double step = 1.0, step_prev = 1.0;
  // The smooth part 0.5*||D - B - T||^2 has a Lipschitz constant of 2.
  constexpr double lipschitz = 2.0;
  for (int k = 1; k <= apg.max_iter; ++k) {
    const double beta = (step_prev - 1.0) / step;
    const Eigen::MatrixXd yb = b + beta * (b - b_prev);
    const Eigen::MatrixXd yt = t + beta * (t - t_prev);
    const Eigen::MatrixXd grad = (yb + yt - d) / lipschitz;

    b_prev = std::move(b);
    t_prev = std::move(t);
    b = low_rank_step(yb - grad, mu / lipschitz, cfg);
    ++diag.svd_count;
    t = soft_threshold(yt - grad, cfg.lambda * mu / lipschitz);
    sparse_step(t, cfg.nonneg_target);

    step_prev = step;
    step = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * step * step));
    mu = std::max(apg.eta * mu, mu_bar);

    const double r = (d - b - t).norm() / norm_f;
    diag.residual_trace.push_back(r);
    diag.iterations = k;
    if (r <= cfg.tol) {
      diag.converged = true;
      break;
    }
  }
  res.background = std::move(b);
  res.target = std::move(t);
  return res;
}

void TensorRpcaConfig::validate() const {
  if (!(lambda > 0.0)) throw std::invalid_argument("TensorRpcaConfig: lambda must be > 0");
  double sum = 0.0;
  for (double a : alpha) {
    if (!(a >= 0.0)) throw std::invalid_argument("TensorRpcaConfig: mode weights must be >= 0");
    sum += a;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("TensorRpcaConfig: mode weights must sum to 1");
  if (!(tol > 0.0 && tol < 1.0)) throw std::invalid_argument("TensorRpcaConfig: tol must be in (0,1)");
  if (support_patience < 1) throw std::invalid_argument("TensorRpcaConfig: support_patience must be >= 1");
  if (!(reweight_eps > 0.0)) throw std::invalid_argument("TensorRpcaConfig: reweight_eps must be > 0");
  if (!(rho > 1.0)) throw std::invalid_argument("TensorRpcaConfig: rho must be > 1");
  if (max_iter < 1) throw std::invalid_argument("TensorRpcaConfig: max_iter must be >= 1");
}

namespace {

std::vector<std::uint8_t> support_of(const Tensor3& t, double threshold, std::size_t& count) {
  std::vector<std::uint8_t> s(t.size());
  count = 0;
  const auto& v = t.data();
  for (std::size_t i = 0; i < v.size(); ++i) {
    s[i] = std::abs(v[i]) > threshold ? 1 : 0;
    count += s[i];
  }
  return s;
}

double diff_norm(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

// ADMM on  sum_i alpha_i ||M_i(i)||_*  +  lambda ||W .* T||_1
// subject to D = B + T and B = M_i for every mode i.
TensorRpcaResult tensor_rpca(const Tensor3& d, const TensorRpcaConfig& cfg) {
  cfg.validate();
  const int d0 = d.dim(0), d1 = d.dim(1), d2 = d.dim(2);
  for (double v : d.data())
    if (!std::isfinite(v)) throw std::invalid_argument("tensor_rpca: input contains non-finite values");

  TensorRpcaResult res{Tensor3(d0, d1, d2), Tensor3(d0, d1, d2), {}};
  auto& diag = res.diagnostics;
  const double norm_d = d.frobenius_norm();
  if (norm_d == 0.0) {
    diag.solver.iterations = 1;
    diag.solver.residual_trace = {0.0};
    diag.solver.converged = true;
    diag.residual_stop_iteration = 1;
    return res;
  }

  const std::size_t n = d.size();
  const auto& dv = d.data();
  int widest = 0;
  for (int i = 1; i < 3; ++i)
    if (d.dim(i) > d.dim(widest)) widest = i;
  const double sigma_max = thin_svd(d.unfold(widest)).s(0);
  ++diag.solver.svd_count;
  double mu = cfg.mu0 > 0.0 ? cfg.mu0 : 1.25 / sigma_max;
  const double mu_max = cfg.mu_max_factor * mu;

  std::vector<double> b(n, 0.0), t(n, 0.0), y(n, 0.0), w(n, 1.0);
  std::vector<std::vector<double>> m(3, std::vector<double>(n, 0.0)), z(3, std::vector<double>(n, 0.0));
  Tensor3 work(d0, d1, d2);

  std::vector<std::uint8_t> prev_support;
  int stable = 0;
  bool have_snapshot = false;
  Tensor3 snap_b, snap_t;

  for (int k = 1; k <= cfg.max_iter; ++k) {
    for (int mode = 0; mode < 3; ++mode) {
      auto& wv = work.data();
      for (std::size_t e = 0; e < n; ++e) wv[e] = b[e] + z[mode][e] / mu;
      if (cfg.alpha[mode] == 0.0) {
        m[mode] = wv;
        continue;
      }
      const Eigen::MatrixXd shrunk = svt(work.unfold(mode), cfg.alpha[mode] / mu);
      ++diag.solver.svd_count;
      m[mode] = Tensor3::fold(shrunk, mode, d0, d1, d2).data();
    }
    for (std::size_t e = 0; e < n; ++e) {
      double acc = dv[e] - t[e] + y[e] / mu;
      for (int mode = 0; mode < 3; ++mode) acc += m[mode][e] - z[mode][e] / mu;
      b[e] = acc / 4.0;
    }
    for (std::size_t e = 0; e < n; ++e) {
      const double v = dv[e] - b[e] + y[e] / mu;
      const double a = std::abs(v) - cfg.lambda * w[e] / mu;
      t[e] = a > 0.0 ? std::copysign(a, v) : 0.0;
    }

    double primal = 0.0;
    for (std::size_t e = 0; e < n; ++e) {
      const double r = dv[e] - b[e] - t[e];
      y[e] += mu * r;
      primal += r * r;
    }
    double consensus = 0.0;
    for (int mode = 0; mode < 3; ++mode) {
      for (std::size_t e = 0; e < n; ++e) z[mode][e] += mu * (b[e] - m[mode][e]);
      consensus = std::max(consensus, diff_norm(b, m[mode]));
    }
    mu = std::min(cfg.rho * mu, mu_max);

    const double residual = std::max(std::sqrt(primal), consensus) / norm_d;
    diag.solver.residual_trace.push_back(residual);
    diag.solver.iterations = k;

    std::size_t support_count = 0;
    Tensor3 t_view(d0, d1, d2);
    t_view.data() = t;
    auto support = support_of(t_view, cfg.support_threshold, support_count);
    diag.support_trace.push_back(support_count);
    if (k > 1 && support == prev_support)
      ++stable;
    else
      stable = 0;
    prev_support = std::move(support);

    if (cfg.reweight)
      for (std::size_t e = 0; e < n; ++e) w[e] = 1.0 / (std::abs(t[e]) + cfg.reweight_eps);

    const bool support_fired =
        cfg.stop_rule == StopRule::SupportOrResidual && stable >= cfg.support_patience && !have_snapshot;
    const bool residual_fired = residual <= cfg.tol;

    if (residual_fired) {
      diag.residual_stop_iteration = k;
      diag.solver.converged = true;
      if (support_fired && diag.early_stop_iteration < 0) diag.early_stop_iteration = k;
      break;
    }
    if (support_fired) {
      diag.early_stop_iteration = k;
      diag.solver.early_stopped = true;
      diag.solver.converged = true;
      if (!cfg.probe_residual_stop) {
        res.background.data() = b;
        res.target.data() = t;
        return res;
      }
      have_snapshot = true;
      snap_b = Tensor3(d0, d1, d2);
      snap_b.data() = b;
      snap_t = t_view;
    }
  }

  if (have_snapshot) {
    // Solver iteration count reports the early-stop point; the probe's
    // length lives in residual_stop_iteration.
    diag.solver.iterations = diag.early_stop_iteration;
    diag.solver.residual_trace.resize(static_cast<std::size_t>(diag.early_stop_iteration));
    res.background = std::move(snap_b);
    res.target = std::move(snap_t);
    return res;
  }
  res.background.data() = b;
  res.target.data() = t;
  return res;
}

}  // namespace irstd

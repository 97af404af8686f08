#include "irstd/acm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "irstd/error.hpp"

namespace irstd::acm {

using Eigen::MatrixXd;
using Eigen::VectorXd;

Tensor4::Tensor4(int n, int c, int h, int w, double fill) : n_(n), c_(c), h_(h), w_(w) {
  if (n < 1 || c < 1 || h < 1 || w < 1) throw std::invalid_argument("Tensor4 dims must be >= 1");
  data_.assign(static_cast<std::size_t>(n) * c * h * w, fill);
}

bool Tensor4::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

BatchNormParams BatchNormParams::identity(int features) {
  return {VectorXd::Ones(features), VectorXd::Zero(features), VectorXd::Zero(features), VectorXd::Ones(features)};
}

void AttentionParams::validate() const {
  const auto c = w1.cols(), hid = w1.rows();
  if (c < 1 || hid < 1) throw std::invalid_argument("attention: empty weight matrices");
  if (w2.rows() != c || w2.cols() != hid) throw std::invalid_argument("attention: W2 must be C x hidden");
  auto check_bn = [](const BatchNormParams& bn, Eigen::Index n) {
    if (bn.gamma.size() != n || bn.beta.size() != n || bn.running_mean.size() != n || bn.running_var.size() != n)
      throw std::invalid_argument("attention: batch-norm parameter length mismatch");
  };
  check_bn(bn1, hid);
  check_bn(bn2, c);
  if (!w1.allFinite() || !w2.allFinite()) throw std::invalid_argument("attention: non-finite weights");
}

AttentionParams make_gcam_params(int channels, int reduction) {
  if (channels < 1 || reduction < 1 || channels % reduction != 0)
    throw std::invalid_argument("global attention: channels must be divisible by the reduction ratio");
  const int hid = channels / reduction;
  return {GateKind::Global, MatrixXd::Zero(hid, channels), MatrixXd::Zero(channels, hid),
          BatchNormParams::identity(hid), BatchNormParams::identity(channels)};
}

AttentionParams make_pcam_params(int channels) {
  if (channels < 4 || channels % 4 != 0)
    throw std::invalid_argument("point-wise attention: channels must be divisible by 4");
  const int hid = channels / 4;
  return {GateKind::PointWise, MatrixXd::Zero(hid, channels), MatrixXd::Zero(channels, hid),
          BatchNormParams::identity(hid), BatchNormParams::identity(channels)};
}

void initialize(AttentionParams& p, WeightInit init, std::mt19937_64& rng, double scale) {
  const int c = p.channels(), hid = p.hidden();
  p.bn1 = BatchNormParams::identity(hid);
  p.bn2 = BatchNormParams::identity(c);
  switch (init) {
    case WeightInit::Zero:
      p.w1.setZero();
      p.w2.setZero();
      return;
    case WeightInit::He: {
      std::normal_distribution<double> g1(0.0, std::sqrt(2.0 / c)), g2(0.0, std::sqrt(2.0 / hid));
      for (Eigen::Index i = 0; i < p.w1.size(); ++i) p.w1.data()[i] = g1(rng);
      for (Eigen::Index i = 0; i < p.w2.size(); ++i) p.w2.data()[i] = g2(rng);
      return;
    }
    case WeightInit::Uniform: {
      std::uniform_real_distribution<double> u(-scale, scale);
      for (Eigen::Index i = 0; i < p.w1.size(); ++i) p.w1.data()[i] = u(rng);
      for (Eigen::Index i = 0; i < p.w2.size(); ++i) p.w2.data()[i] = u(rng);
      for (auto* bn : {&p.bn1, &p.bn2}) {
        for (Eigen::Index i = 0; i < bn->gamma.size(); ++i) {
          bn->gamma(i) = 1.0 + u(rng);
          bn->beta(i) = u(rng);
          bn->running_mean(i) = u(rng);
          bn->running_var(i) = 1.0 + std::abs(u(rng));
        }
      }
      return;
    }
  }
}

MatrixXd global_avg_pool(const Tensor4& y) {
  MatrixXd out(y.n(), y.c());
  const double inv = 1.0 / (static_cast<double>(y.h()) * y.w());
  for (int n = 0; n < y.n(); ++n)
    for (int c = 0; c < y.c(); ++c) {
      double s = 0.0;
      for (int h = 0; h < y.h(); ++h)
        for (int w = 0; w < y.w(); ++w) s += y(n, c, h, w);
      out(n, c) = s * inv;
    }
  return out;
}

namespace {

// Pixel matrix: one row per (n, h, w), one column per channel.
MatrixXd to_pixels(const Tensor4& t) {
  MatrixXd m(static_cast<Eigen::Index>(t.n()) * t.h() * t.w(), t.c());
  for (int n = 0; n < t.n(); ++n)
    for (int c = 0; c < t.c(); ++c)
      for (int h = 0; h < t.h(); ++h)
        for (int w = 0; w < t.w(); ++w) m((static_cast<Eigen::Index>(n) * t.h() + h) * t.w() + w, c) = t(n, c, h, w);
  return m;
}

Tensor4 from_pixels(const MatrixXd& m, int n_, int h_, int w_) {
  Tensor4 t(n_, static_cast<int>(m.cols()), h_, w_);
  for (int n = 0; n < n_; ++n)
    for (int c = 0; c < t.c(); ++c)
      for (int h = 0; h < h_; ++h)
        for (int w = 0; w < w_; ++w) t(n, c, h, w) = m((static_cast<Eigen::Index>(n) * h_ + h) * w_ + w, c);
  return t;
}

struct BnCache {
  MatrixXd xhat;
  VectorXd inv_std;
};

MatrixXd bn_forward(const MatrixXd& x, const BatchNormParams& p, Mode mode, BnCache& cache) {
  const double rows = static_cast<double>(x.rows());
  VectorXd mean, var;
  if (mode == Mode::Train) {
    mean = x.colwise().mean().transpose();
    var = ((x.rowwise() - mean.transpose()).array().square().colwise().sum() / rows).transpose();
  } else {
    mean = p.running_mean;
    var = p.running_var;
  }
  cache.inv_std = (var.array() + kBatchNormEps).rsqrt();
  cache.xhat = (x.rowwise() - mean.transpose()) * cache.inv_std.asDiagonal();
  return (cache.xhat * p.gamma.asDiagonal()).rowwise() + p.beta.transpose();
}

MatrixXd bn_backward(const MatrixXd& dy, const BatchNormParams& p, Mode mode, const BnCache& cache,
                     VectorXd& dgamma, VectorXd& dbeta) {
  dgamma = (dy.array() * cache.xhat.array()).colwise().sum().transpose();
  dbeta = dy.colwise().sum().transpose();
  const MatrixXd dxhat = dy * p.gamma.asDiagonal();
  if (mode == Mode::Inference) return dxhat * cache.inv_std.asDiagonal();
  const double m = static_cast<double>(dy.rows());
  const Eigen::RowVectorXd sum_dxhat = dxhat.colwise().sum();
  const Eigen::RowVectorXd sum_dxhat_xhat = (dxhat.array() * cache.xhat.array()).colwise().sum();
  MatrixXd dx = (m * dxhat).rowwise() - sum_dxhat;
  dx -= cache.xhat * sum_dxhat_xhat.asDiagonal();
  return dx * (cache.inv_std / m).asDiagonal();
}

}  // namespace

struct GateState {
  GateKind kind = GateKind::PointWise;
  int n = 0, c = 0, h = 0, w = 0;  // input tensor shape
  MatrixXd input;                  // pooled (N x C) or pixel matrix
  MatrixXd pre_relu, post_relu, gate;
  BnCache bn1, bn2;
};

namespace {

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

Tensor4 gate_forward(const Tensor4& in, const AttentionParams& p, Mode mode, GateState& st) {
  p.validate();
  if (in.c() != p.channels()) throw std::invalid_argument("attention: input channel count does not match weights");
  st.kind = p.kind;
  st.n = in.n();
  st.c = in.c();
  st.h = in.h();
  st.w = in.w();
  st.input = p.kind == GateKind::Global ? global_avg_pool(in) : to_pixels(in);
  st.pre_relu = bn_forward(st.input * p.w1.transpose(), p.bn1, mode, st.bn1);
  st.post_relu = st.pre_relu.cwiseMax(0.0);
  st.gate = bn_forward(st.post_relu * p.w2.transpose(), p.bn2, mode, st.bn2).unaryExpr(&sigmoid);
  if (p.kind == GateKind::Global) return from_pixels(st.gate, st.n, 1, 1);
  return from_pixels(st.gate, st.n, st.h, st.w);
}

// dgate has the gate's own shape; returns the gradient w.r.t. the gate input.
Tensor4 gate_backward(const Tensor4& dgate, const AttentionParams& p, Mode mode, const GateState& st,
                      AttentionGrads& g) {
  const MatrixXd dg = to_pixels(dgate);
  const MatrixXd dpre2 = dg.array() * st.gate.array() * (1.0 - st.gate.array());
  const MatrixXd da2 = bn_backward(dpre2, p.bn2, mode, st.bn2, g.gamma2, g.beta2);
  g.w2 = da2.transpose() * st.post_relu;
  MatrixXd dr1 = da2 * p.w2;
  dr1.array() *= (st.pre_relu.array() > 0.0).cast<double>();
  const MatrixXd da1 = bn_backward(dr1, p.bn1, mode, st.bn1, g.gamma1, g.beta1);
  g.w1 = da1.transpose() * st.input;
  const MatrixXd dinput = da1 * p.w1;
  if (st.kind == GateKind::PointWise) return from_pixels(dinput, st.n, st.h, st.w);
  Tensor4 out(st.n, st.c, st.h, st.w);
  const double inv = 1.0 / (static_cast<double>(st.h) * st.w);
  for (int n = 0; n < st.n; ++n)
    for (int c = 0; c < st.c; ++c)
      for (int h = 0; h < st.h; ++h)
        for (int w = 0; w < st.w; ++w) out(n, c, h, w) = dinput(n, c) * inv;
  return out;
}

AttentionGrads zero_grads(const AttentionParams& p) {
  return {MatrixXd::Zero(p.w1.rows(), p.w1.cols()), MatrixXd::Zero(p.w2.rows(), p.w2.cols()),
          VectorXd::Zero(p.hidden()),                VectorXd::Zero(p.hidden()),
          VectorXd::Zero(p.channels()),              VectorXd::Zero(p.channels())};
}

// Gate value with spatial broadcast for N x C x 1 x 1 gates.
inline double gate_at(const Tensor4& g, int n, int c, int h, int w) {
  return g.h() == 1 && g.w() == 1 ? g(n, c, 0, 0) : g(n, c, h, w);
}

void check_gate_shape(const Tensor4& g, const Tensor4& x) {
  const bool global = g.h() == 1 && g.w() == 1;
  if (g.n() != x.n() || g.c() != x.c() || (!global && (g.h() != x.h() || g.w() != x.w())))
    throw std::invalid_argument("gate shape does not broadcast to the feature shape");
}

// out += g (broadcast) * x
void add_gated(Tensor4& out, const Tensor4& g, const Tensor4& x) {
  for (int n = 0; n < x.n(); ++n)
    for (int c = 0; c < x.c(); ++c)
      for (int h = 0; h < x.h(); ++h)
        for (int w = 0; w < x.w(); ++w) out(n, c, h, w) += gate_at(g, n, c, h, w) * x(n, c, h, w);
}

// Gradient of sum(dz * g * x) w.r.t. g, reduced to g's shape.
Tensor4 reduce_to_gate(const Tensor4& dz, const Tensor4& x, const Tensor4& g) {
  Tensor4 out(g.n(), g.c(), g.h(), g.w());
  const bool global = g.h() == 1 && g.w() == 1;
  for (int n = 0; n < x.n(); ++n)
    for (int c = 0; c < x.c(); ++c)
      for (int h = 0; h < x.h(); ++h)
        for (int w = 0; w < x.w(); ++w) {
          const double v = dz(n, c, h, w) * x(n, c, h, w);
          if (global)
            out(n, c, 0, 0) += v;
          else
            out(n, c, h, w) += v;
        }
  return out;
}

Tensor4 gated(const Tensor4& g, const Tensor4& x) {
  Tensor4 out(x.n(), x.c(), x.h(), x.w());
  add_gated(out, g, x);
  return out;
}

void add_into(Tensor4& a, const Tensor4& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] += b.data()[i];
}

}  // namespace

const char* variant_name(ModulationVariant v) {
  switch (v) {
    case ModulationVariant::TopDownLocal: return "TopDownLocal";
    case ModulationVariant::BiLocal: return "BiLocal";
    case ModulationVariant::BiGlobal: return "BiGlobal";
    case ModulationVariant::ACM: return "ACM";
  }
  return "?";
}

ModulationVariant parse_variant(const std::string& name) {
  for (ModulationVariant v : all_variants())
    if (name == variant_name(v)) return v;
  throw std::invalid_argument("unknown modulation variant: " + name);
}

const std::vector<ModulationVariant>& all_variants() {
  static const std::vector<ModulationVariant> v = {ModulationVariant::TopDownLocal, ModulationVariant::BiLocal,
                                                   ModulationVariant::BiGlobal, ModulationVariant::ACM};
  return v;
}

namespace {

std::pair<GateKind, GateKind> expected_kinds(ModulationVariant v) {
  switch (v) {
    case ModulationVariant::ACM: return {GateKind::Global, GateKind::PointWise};
    case ModulationVariant::BiGlobal: return {GateKind::Global, GateKind::Global};
    case ModulationVariant::BiLocal:
    case ModulationVariant::TopDownLocal: return {GateKind::PointWise, GateKind::PointWise};
  }
  throw std::invalid_argument("unknown modulation variant");
}

}  // namespace

void FusionParams::validate() const {
  first.validate();
  second.validate();
  const auto [k1, k2] = expected_kinds(variant);
  if (first.kind != k1 || second.kind != k2)
    throw std::invalid_argument(std::string("gate kinds do not match variant ") + variant_name(variant));
  if (first.channels() != second.channels()) throw std::invalid_argument("fusion gates disagree on channel count");
}

FusionParams make_fusion_params(ModulationVariant variant, int channels) {
  if (channels < 4 || channels % 4 != 0) throw std::invalid_argument("fusion: channels must be divisible by 4");
  const auto [k1, k2] = expected_kinds(variant);
  auto make = [channels](GateKind k) { return k == GateKind::Global ? make_gcam_params(channels, 4) : make_pcam_params(channels); };
  return {variant, make(k1), make(k2)};
}

std::size_t param_count(ModulationVariant variant, int channels) {
  const FusionParams p = make_fusion_params(variant, channels);
  return p.first.weight_count() + p.second.weight_count();
}

struct FusionGraph::Recorded {
  Tensor4 x, y, y1;  // y1: La(Y) * Y for TopDownLocal
  Tensor4 g1, g2;
  GateState s1, s2;
};

FusionGraph::FusionGraph(FusionParams params, Mode mode) : params_(std::move(params)), mode_(mode) {
  params_.validate();
}

Tensor4 FusionGraph::forward(const Tensor4& x, const Tensor4& y) {
  if (!x.same_shape(y)) throw std::invalid_argument("fuse: X and Y must share a shape");
  if (x.c() != params_.channels()) throw std::invalid_argument("fuse: channel count does not match parameters");
  auto rec = std::make_shared<Recorded>();
  rec->x = x;
  rec->y = y;
  Tensor4 z(x.n(), x.c(), x.h(), x.w());
  if (params_.variant == ModulationVariant::TopDownLocal) {
    rec->g1 = gate_forward(y, params_.first, mode_, rec->s1);
    rec->y1 = gated(rec->g1, y);
    rec->g2 = gate_forward(rec->y1, params_.second, mode_, rec->s2);
    add_gated(z, rec->g2, x);
    add_into(z, y);
  } else {
    rec->g1 = gate_forward(y, params_.first, mode_, rec->s1);
    rec->g2 = gate_forward(x, params_.second, mode_, rec->s2);
    add_gated(z, rec->g1, x);
    add_gated(z, rec->g2, y);
  }
  rec_ = std::move(rec);
  return z;
}

FusionGrads FusionGraph::backward(const Tensor4& dz, bool freeze_gates) const {
  if (!rec_) throw StateError("FusionGraph::backward called before forward");
  const Recorded& r = *rec_;
  if (!dz.same_shape(r.x)) throw std::invalid_argument("backward: upstream gradient shape mismatch");
  FusionGrads g;
  g.first = zero_grads(params_.first);
  g.second = zero_grads(params_.second);
  if (params_.variant == ModulationVariant::TopDownLocal) {
    g.dx = gated(r.g2, dz);
    g.dy = dz;
    if (!freeze_gates) {
      const Tensor4 dy1 = gate_backward(reduce_to_gate(dz, r.x, r.g2), params_.second, mode_, r.s2, g.second);
      add_gated(g.dy, r.g1, dy1);
      add_into(g.dy, gate_backward(reduce_to_gate(dy1, r.y, r.g1), params_.first, mode_, r.s1, g.first));
    }
    return g;
  }
  g.dx = gated(r.g1, dz);
  g.dy = gated(r.g2, dz);
  if (!freeze_gates) {
    add_into(g.dy, gate_backward(reduce_to_gate(dz, r.x, r.g1), params_.first, mode_, r.s1, g.first));
    add_into(g.dx, gate_backward(reduce_to_gate(dz, r.y, r.g2), params_.second, mode_, r.s2, g.second));
  }
  return g;
}

const Tensor4& FusionGraph::first_gate() const {
  if (!rec_) throw StateError("no forward pass recorded");
  return rec_->g1;
}

const Tensor4& FusionGraph::second_gate() const {
  if (!rec_) throw StateError("no forward pass recorded");
  return rec_->g2;
}

Tensor4 fuse(const Tensor4& x, const Tensor4& y, const FusionParams& params, Mode mode) {
  FusionGraph graph(params, mode);
  return graph.forward(x, y);
}

Tensor4 gcam_gate(const Tensor4& y, const AttentionParams& p, Mode mode) {
  if (p.kind != GateKind::Global) throw std::invalid_argument("gcam_gate: parameters are not a global gate");
  GateState st;
  return gate_forward(y, p, mode, st);
}

Tensor4 pcam_gate(const Tensor4& x, const AttentionParams& p, Mode mode) {
  if (p.kind != GateKind::PointWise) throw std::invalid_argument("pcam_gate: parameters are not a point-wise gate");
  GateState st;
  return gate_forward(x, p, mode, st);
}

Tensor4 modulate_high_level(const Tensor4& x, const Tensor4& y, const AttentionParams& pcam, Mode mode) {
  if (!x.same_shape(y)) throw std::invalid_argument("modulate_high_level: X and Y must share a shape");
  return gated(pcam_gate(x, pcam, mode), y);
}

Tensor4 combine_with_gates(ModulationVariant variant, const Tensor4& x, const Tensor4& y, const Tensor4& first,
                           const Tensor4& second) {
  if (!x.same_shape(y)) throw std::invalid_argument("combine_with_gates: X and Y must share a shape");
  Tensor4 z(x.n(), x.c(), x.h(), x.w());
  if (variant == ModulationVariant::TopDownLocal) {
    check_gate_shape(first, x);
    add_gated(z, first, x);
    add_into(z, y);
    return z;
  }
  check_gate_shape(first, x);
  check_gate_shape(second, y);
  add_gated(z, first, x);
  add_gated(z, second, y);
  return z;
}

LossWithGrad soft_iou_loss(const Tensor4& pred, const Tensor4& gt) {
  if (!pred.same_shape(gt)) throw std::invalid_argument("soft_iou_loss: shape mismatch");
  double inter = 0.0, sp = 0.0, sg = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = pred.data()[i], g = gt.data()[i];
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("soft_iou_loss: predictions must lie in [0,1]");
    if (g != 0.0 && g != 1.0) throw std::invalid_argument("soft_iou_loss: ground truth must be binary");
    inter += p * g;
    sp += p;
    sg += g;
  }
  const double uni = sp + sg - inter + kSoftIouEps;
  LossWithGrad out{1.0 - inter / uni, Tensor4(pred.n(), pred.c(), pred.h(), pred.w())};
  // d(I/U)/dp = (g U - I (1 - g)) / U^2
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double g = gt.data()[i];
    out.grad.data()[i] = -(g * uni - inter * (1.0 - g)) / (uni * uni);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gradient check
// ---------------------------------------------------------------------------

namespace {

struct Probe {
  std::string name;
  std::vector<double*> values;
  std::vector<double> analytic;
};

void add_matrix(std::vector<Probe>& probes, std::string name, MatrixXd& m, const MatrixXd& grad) {
  Probe p{std::move(name), {}, {}};
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    p.values.push_back(m.data() + i);
    p.analytic.push_back(grad.data()[i]);
  }
  probes.push_back(std::move(p));
}

void add_vector(std::vector<Probe>& probes, std::string name, VectorXd& v, const VectorXd& grad) {
  Probe p{std::move(name), {}, {}};
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    p.values.push_back(v.data() + i);
    p.analytic.push_back(grad(i));
  }
  probes.push_back(std::move(p));
}

void add_tensor(std::vector<Probe>& probes, std::string name, Tensor4& t, const Tensor4& grad) {
  Probe p{std::move(name), {}, {}};
  for (std::size_t i = 0; i < t.size(); ++i) {
    p.values.push_back(t.data().data() + i);
    p.analytic.push_back(grad.data()[i]);
  }
  probes.push_back(std::move(p));
}

void add_attention(std::vector<Probe>& probes, const std::string& prefix, AttentionParams& p, const AttentionGrads& g) {
  add_matrix(probes, prefix + ".w1", p.w1, g.w1);
  add_matrix(probes, prefix + ".w2", p.w2, g.w2);
  add_vector(probes, prefix + ".bn1.gamma", p.bn1.gamma, g.gamma1);
  add_vector(probes, prefix + ".bn1.beta", p.bn1.beta, g.beta1);
  add_vector(probes, prefix + ".bn2.gamma", p.bn2.gamma, g.gamma2);
  add_vector(probes, prefix + ".bn2.beta", p.bn2.beta, g.beta2);
}

}  // namespace

GradCheckReport gradient_check(ModulationVariant variant, const GradCheckOptions& opt) {
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  FusionParams params = make_fusion_params(variant, opt.c);
  initialize(params.first, WeightInit::Uniform, rng);
  initialize(params.second, WeightInit::Uniform, rng);
  Tensor4 x(opt.n, opt.c, opt.h, opt.w), y(opt.n, opt.c, opt.h, opt.w), up(opt.n, opt.c, opt.h, opt.w);
  for (auto* t : {&x, &y, &up})
    for (double& v : t->data()) v = u(rng);

  FusionGraph graph(params, opt.mode);
  graph.forward(x, y);
  const FusionGrads grads = graph.backward(up);

  std::vector<Probe> probes;
  add_tensor(probes, "X", x, grads.dx);
  add_tensor(probes, "Y", y, grads.dy);
  add_attention(probes, "first", params.first, grads.first);
  add_attention(probes, "second", params.second, grads.second);

  auto objective = [&] {
    const Tensor4 z = fuse(x, y, params, opt.mode);
    long double s = 0.0L;
    for (std::size_t i = 0; i < z.size(); ++i) s += static_cast<long double>(z.data()[i]) * up.data()[i];
    return static_cast<double>(s);
  };

  GradCheckReport report;
  report.variant = variant;
  for (Probe& p : probes) {
    GradCheckEntry e{p.name, 0.0, 0.0, p.values.size()};
    for (std::size_t i = 0; i < p.values.size(); ++i) {
      double* v = p.values[i];
      const double saved = *v;
      *v = saved + opt.step;
      const double plus = objective();
      *v = saved - opt.step;
      const double minus = objective();
      *v = saved;
      const double numeric = (plus - minus) / (2.0 * opt.step);
      const double a = p.analytic[i];
      const double abs_err = std::abs(a - numeric);
      const double rel_err = abs_err / std::max({std::abs(a), std::abs(numeric), 1e-6});
      e.max_abs_error = std::max(e.max_abs_error, abs_err);
      e.max_rel_error = std::max(e.max_rel_error, rel_err);
    }
    report.max_rel_error = std::max(report.max_rel_error, e.max_rel_error);
    report.entries.push_back(e);
  }
  return report;
}

nlohmann::json to_json(const GradCheckReport& r) {
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& e : r.entries)
    tensors.push_back({{"tensor", e.tensor}, {"entries", e.entries}, {"max_rel_error", e.max_rel_error},
                       {"max_abs_error", e.max_abs_error}});
  return {{"variant", variant_name(r.variant)}, {"max_rel_error", r.max_rel_error}, {"tensors", tensors}};
}

// ---------------------------------------------------------------------------
// Serialization: matrices are {"shape":[rows, cols], "data":[row-major]}.
// ---------------------------------------------------------------------------

namespace {

nlohmann::json matrix_json(const MatrixXd& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return {{"shape", {m.rows(), m.cols()}}, {"data", data}};
}

MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto shape = j.at("shape").get<std::vector<Eigen::Index>>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (shape.size() != 2 || shape[0] < 1 || shape[1] < 1 || static_cast<Eigen::Index>(data.size()) != shape[0] * shape[1])
    throw std::invalid_argument("matrix JSON: shape does not match data length");
  MatrixXd m(shape[0], shape[1]);
  for (Eigen::Index i = 0; i < shape[0]; ++i)
    for (Eigen::Index k = 0; k < shape[1]; ++k) m(i, k) = data[static_cast<std::size_t>(i * shape[1] + k)];
  return m;
}

std::vector<double> to_vec(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

VectorXd from_vec(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

nlohmann::json bn_json(const BatchNormParams& bn) {
  return {{"gamma", to_vec(bn.gamma)}, {"beta", to_vec(bn.beta)}, {"running_mean", to_vec(bn.running_mean)},
          {"running_var", to_vec(bn.running_var)}};
}

BatchNormParams bn_from_json(const nlohmann::json& j) {
  return {from_vec(j.at("gamma")), from_vec(j.at("beta")), from_vec(j.at("running_mean")),
          from_vec(j.at("running_var"))};
}

}  // namespace

nlohmann::json to_json(const AttentionParams& p) {
  return {{"kind", p.kind == GateKind::Global ? "global" : "pointwise"},
          {"w1", matrix_json(p.w1)},
          {"w2", matrix_json(p.w2)},
          {"bn1", bn_json(p.bn1)},
          {"bn2", bn_json(p.bn2)}};
}

AttentionParams attention_from_json(const nlohmann::json& j) {
  try {
    AttentionParams p;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "global")
      p.kind = GateKind::Global;
    else if (kind == "pointwise")
      p.kind = GateKind::PointWise;
    else
      throw std::invalid_argument("attention JSON: kind must be 'global' or 'pointwise'");
    p.w1 = matrix_from_json(j.at("w1"));
    p.w2 = matrix_from_json(j.at("w2"));
    p.bn1 = bn_from_json(j.at("bn1"));
    p.bn2 = bn_from_json(j.at("bn2"));
    p.validate();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("attention JSON: ") + e.what());
  }
}

nlohmann::json to_json(const FusionParams& p) {
  return {{"variant", variant_name(p.variant)},
          {"channels", p.channels()},
          {"first", to_json(p.first)},
          {"second", to_json(p.second)}};
}

FusionParams fusion_from_json(const nlohmann::json& j) {
  try {
    FusionParams p{parse_variant(j.at("variant").get<std::string>()), attention_from_json(j.at("first")),
                   attention_from_json(j.at("second"))};
    if (j.contains("channels") && j["channels"].get<int>() != p.channels())
      throw std::invalid_argument("fusion JSON: channel count disagrees with weights");
    p.validate();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("fusion JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Backbone
// ---------------------------------------------------------------------------

BackbonePlan backbone_plan(int blocks, int input_size) {
  if (blocks < 1) throw std::invalid_argument("backbone_plan: blocks must be >= 1");
  if (input_size < 4 || input_size % 4 != 0)
    throw std::invalid_argument("backbone_plan: input size must be a positive multiple of 4");
  BackbonePlan plan;
  plan.blocks = blocks;
  // Each residual block holds two 3x3 convolutions; only the first conv of
  // Stage-2 and Stage-3 sub-samples.
  plan.stages = {
      {"Conv-1", input_size, input_size, 16, 1, false},
      {"Stage-1", input_size, input_size, 16, 2 * blocks, false},
      {"Stage-2", input_size / 2, input_size / 2, 32, 2 * blocks, true},
      {"Stage-3", input_size / 4, input_size / 4, 64, 2 * blocks, true},
  };
  for (const auto& s : plan.stages) plan.weight_layer_count += s.conv_layers;
  return plan;
}

nlohmann::json to_json(const BackbonePlan& p) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& s : p.stages)
    stages.push_back({{"name", s.name}, {"height", s.height}, {"width", s.width}, {"channels", s.channels},
                      {"conv_layers", s.conv_layers}, {"downsample", s.downsample}});
  return {{"blocks", p.blocks}, {"stages", stages}, {"weight_layer_count", p.weight_layer_count}};
}

}  // namespace irstd::acm

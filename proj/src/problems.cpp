#include "irstd/problems.hpp"

#include <random>
#include <stdexcept>

namespace irstd {

LowRankSparseProblem make_low_rank_sparse(int rows, int cols, int rank, double density, double magnitude,
                                          std::uint64_t seed) {
  if (rows < 1 || cols < 1 || rank < 1 || rank > std::min(rows, cols))
    throw std::invalid_argument("make_low_rank_sparse: need 1 <= rank <= min(rows, cols)");
  if (!(density >= 0.0 && density <= 1.0)) throw std::invalid_argument("make_low_rank_sparse: density must lie in [0,1]");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixXd u(rows, rank), v(cols, rank);
  for (Eigen::Index i = 0; i < u.size(); ++i) u.data()[i] = gauss(rng);
  for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = gauss(rng);
  LowRankSparseProblem p;
  p.background = u * v.transpose();
  p.target = Eigen::MatrixXd::Zero(rows, cols);
  for (Eigen::Index i = 0; i < p.target.size(); ++i)
    if (unit(rng) < density) p.target.data()[i] = unit(rng) < 0.5 ? -magnitude : magnitude;
  p.d = p.background + p.target;
  return p;
}

TensorProblem make_low_rank_tensor(int d0, int d1, int d2, int rank, double magnitude, std::uint64_t seed) {
  if (rank < 1) throw std::invalid_argument("make_low_rank_tensor: rank must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> factor(0.5, 1.0);
  TensorProblem p{Tensor3(d0, d1, d2), Tensor3(d0, d1, d2), Tensor3(d0, d1, d2)};
  for (int r = 0; r < rank; ++r) {
    std::vector<double> a(d0), b(d1), c(d2);
    for (double& x : a) x = factor(rng);
    for (double& x : b) x = factor(rng);
    for (double& x : c) x = factor(rng);
    for (int s = 0; s < d2; ++s)
      for (int i = 0; i < d0; ++i)
        for (int j = 0; j < d1; ++j) p.background(i, j, s) += a[i] * b[j] * c[s];
  }
  std::uniform_int_distribution<int> pick_i(0, d0 - 1), pick_j(0, d1 - 1);
  for (int s = 0; s < d2; ++s) p.target(pick_i(rng), pick_j(rng), s) = magnitude;
  for (std::size_t e = 0; e < p.d.size(); ++e) p.d.data()[e] = p.background.data()[e] + p.target.data()[e];
  return p;
}

}  // namespace irstd

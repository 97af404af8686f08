#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "irstd/imgproc.hpp"

namespace irstd {

/// D = B + T with known parts.
struct LowRankSparseProblem {
  Eigen::MatrixXd d, background, target;
};

/// B = U V^T with standard-normal factors of the given rank; T holds
/// +/-magnitude spikes at each entry with probability `density`.
LowRankSparseProblem make_low_rank_sparse(int rows, int cols, int rank, double density, double magnitude,
                                          std::uint64_t seed);

struct TensorProblem {
  Tensor3 d, background, target;
};

/// CP background sum_r a_r o b_r o c_r with positive factors plus one
/// spike of `magnitude` at a random position of every frontal slice.
TensorProblem make_low_rank_tensor(int d0, int d1, int d2, int rank, double magnitude, std::uint64_t seed);

}  // namespace irstd

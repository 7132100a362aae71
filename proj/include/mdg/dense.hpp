#pragma once

#include <cstdint>
#include <vector>

#include "mdg/matrix.hpp"

namespace mdg {

// Fully connected layer; weight is out×in, applied to row-major batches as
// y = x·Wᵀ + b.
struct DenseLayer {
  Mat weight;
  std::vector<double> bias;

  std::size_t in_dim() const { return weight.cols; }
  std::size_t out_dim() const { return weight.rows; }
};

struct DenseGrad {
  Mat dweight;
  std::vector<double> dbias;
};

// Glorot-uniform initialization, deterministic for a given seed.
DenseLayer init_dense(std::size_t out_dim, std::size_t in_dim, std::uint64_t seed);

Mat dense_forward(const DenseLayer& l, const Mat& x);

// Accumulates dweight/dbias into `grad` (which must be zero-initialized or
// carry a running sum) and returns dx.
Mat dense_backward(const DenseLayer& l, const Mat& x, const Mat& dy, DenseGrad& grad);

DenseGrad zero_grad(const DenseLayer& l);

}  // namespace mdg

#include "mdg/dense.hpp"

#include <cmath>

#include "mdg/rng.hpp"

namespace mdg {

DenseLayer init_dense(std::size_t out_dim, std::size_t in_dim, std::uint64_t seed) {
  DenseLayer l;
  l.weight = Mat(out_dim, in_dim);
  l.bias.assign(out_dim, 0.0);
  std::mt19937_64 rng(seed);
  const double limit = std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
  for (auto& w : l.weight.data) w = uniform(rng, -limit, limit);
  return l;
}

Mat dense_forward(const DenseLayer& l, const Mat& x) {
  if (x.cols != l.in_dim()) {
    throw ShapeMismatch("dense_forward: input width " + std::to_string(x.cols) +
                        " != layer in_dim " + std::to_string(l.in_dim()));
  }
  Mat y = matmul_nt(x, l.weight);
  add_rowwise(y, l.bias);
  return y;
}

Mat dense_backward(const DenseLayer& l, const Mat& x, const Mat& dy, DenseGrad& grad) {
  // dW += dyᵀ·x, db += colsum(dy), dx = dy·W
  Mat dw = matmul_tn(dy, x);
  for (std::size_t i = 0; i < dw.data.size(); ++i) grad.dweight.data[i] += dw.data[i];
  const auto db = colsum(dy);
  for (std::size_t i = 0; i < db.size(); ++i) grad.dbias[i] += db[i];
  return matmul(dy, l.weight);
}

DenseGrad zero_grad(const DenseLayer& l) {
  DenseGrad g;
  g.dweight = Mat(l.weight.rows, l.weight.cols);
  g.dbias.assign(l.bias.size(), 0.0);
  return g;
}

}  // namespace mdg

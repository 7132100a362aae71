#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mdg/errors.hpp"

namespace mdg {

// Dense row-major matrix of doubles. Small and unapologetically simple;
// everything in the numeric core runs through these few kernels.
struct Mat {
  std::size_t rows = 0, cols = 0;
  std::vector<double> data;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
};

// c = a * b            (m×k, k×n)
Mat matmul(const Mat& a, const Mat& b);
// c = a * b^T          (m×k, n×k)
Mat matmul_nt(const Mat& a, const Mat& b);
// c = a^T * b          (k×m, k×n)
Mat matmul_tn(const Mat& a, const Mat& b);

void add_rowwise(Mat& m, std::span<const double> bias);
Mat relu(const Mat& m);
// dy masked by the sign of the pre-activation z.
Mat relu_backward(const Mat& z, const Mat& dy);
std::vector<double> colsum(const Mat& m);
std::vector<double> colmean(const Mat& m);

// Numerically stable softmax of one logit vector.
std::vector<double> softmax(std::span<const double> logits);

// Adam with bias correction. Parameter slots are identified by position;
// callers must pass the same tensors in the same order on every step.
struct AdamOpt {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void step(const std::vector<std::span<double>>& params,
            const std::vector<std::span<const double>>& grads);

 private:
  long step_count_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace mdg

#include "mdg/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mdg {

namespace {

void check(bool ok, const char* what) {
  if (!ok) throw ShapeMismatch(std::string("matrix shape mismatch in ") + what);
}

}  // namespace

Mat matmul(const Mat& a, const Mat& b) {
  check(a.cols == b.rows, "matmul");
  Mat c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = a.data.data() + i * a.cols;
    double* crow = c.data.data() + i * c.cols;
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = b.data.data() + k * b.cols;
      for (std::size_t j = 0; j < b.cols; ++j) {
        crow[j] += aik * brow[j];
      }
    }
  }
  return c;
}

Mat matmul_nt(const Mat& a, const Mat& b) {
  check(a.cols == b.cols, "matmul_nt");
  Mat c(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = a.data.data() + i * a.cols;
    for (std::size_t j = 0; j < b.rows; ++j) {
      const double* brow = b.data.data() + j * b.cols;
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
      c(i, j) = acc;
    }
  }
  return c;
}

Mat matmul_tn(const Mat& a, const Mat& b) {
  check(a.rows == b.rows, "matmul_tn");
  Mat c(a.cols, b.cols);
  for (std::size_t k = 0; k < a.rows; ++k) {
    const double* arow = a.data.data() + k * a.cols;
    const double* brow = b.data.data() + k * b.cols;
    for (std::size_t i = 0; i < a.cols; ++i) {
      const double aki = arow[i];
      if (aki == 0.0) continue;
      double* crow = c.data.data() + i * c.cols;
      for (std::size_t j = 0; j < b.cols; ++j) {
        crow[j] += aki * brow[j];
      }
    }
  }
  return c;
}

void add_rowwise(Mat& m, std::span<const double> bias) {
  check(m.cols == bias.size(), "add_rowwise");
  for (std::size_t i = 0; i < m.rows; ++i) {
    double* row = m.data.data() + i * m.cols;
    for (std::size_t j = 0; j < m.cols; ++j) row[j] += bias[j];
  }
}

Mat relu(const Mat& m) {
  Mat out = m;
  for (auto& x : out.data) x = std::max(x, 0.0);
  return out;
}

Mat relu_backward(const Mat& z, const Mat& dy) {
  check(z.rows == dy.rows && z.cols == dy.cols, "relu_backward");
  Mat out = dy;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    if (z.data[i] <= 0.0) out.data[i] = 0.0;
  }
  return out;
}

std::vector<double> colsum(const Mat& m) {
  std::vector<double> out(m.cols, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double* row = m.data.data() + i * m.cols;
    for (std::size_t j = 0; j < m.cols; ++j) out[j] += row[j];
  }
  return out;
}

std::vector<double> colmean(const Mat& m) {
  auto out = colsum(m);
  if (m.rows > 0) {
    for (auto& x : out) x /= static_cast<double>(m.rows);
  }
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.begin(), logits.end());
  const double mx = *std::max_element(out.begin(), out.end());
  double sum = 0.0;
  for (auto& x : out) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (auto& x : out) x /= sum;
  return out;
}

void AdamOpt::step(const std::vector<std::span<double>>& params,
                   const std::vector<std::span<const double>>& grads) {
  if (params.size() != grads.size()) {
    throw ShapeMismatch("adam: parameter/gradient slot count mismatch");
  }
  if (m_.empty()) {
    m_.resize(params.size());
    v_.resize(params.size());
    for (std::size_t s = 0; s < params.size(); ++s) {
      m_[s].assign(params[s].size(), 0.0);
      v_[s].assign(params[s].size(), 0.0);
    }
  }
  ++step_count_;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count_));
  for (std::size_t s = 0; s < params.size(); ++s) {
    auto p = params[s];
    auto g = grads[s];
    if (p.size() != g.size() || p.size() != m_[s].size()) {
      throw ShapeMismatch("adam: slot size changed between steps");
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      m_[s][i] = beta1 * m_[s][i] + (1.0 - beta1) * g[i];
      v_[s][i] = beta2 * v_[s][i] + (1.0 - beta2) * g[i] * g[i];
      const double mhat = m_[s][i] / bc1;
      const double vhat = v_[s][i] / bc2;
      p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

}  // namespace mdg

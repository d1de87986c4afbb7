#include "c2sw/numerics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "c2sw/error.hpp"

namespace c2sw {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw Error("matrix data length " + std::to_string(data_.size()) + " does not match shape " +
                shape_string());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::row_vector(std::span<const double> values) {
  return Matrix(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

void Matrix::set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

std::string Matrix::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Matrix& Matrix::operator+=(const Matrix& other) {
  if (!same_shape(other)) {
    throw Error("cannot add " + other.shape_string() + " to " + shape_string());
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw Error("matmul shape mismatch: " + a.shape_string() + " x " + b.shape_string());
  }
  Matrix out(a.rows(), b.cols());
  // i-k-j order; every output entry still accumulates its products in k order.
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      auto b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw Error("matmul_tn shape mismatch: " + a.shape_string() + "^T x " + b.shape_string());
  }
  Matrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto a_row = a.row(k);
    auto b_row = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a_row[i];
      if (aki == 0.0) continue;
      auto out_row = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aki * b_row[j];
    }
  }
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw Error("matmul_nt shape mismatch: " + a.shape_string() + " x " + b.shape_string() +
                "^T");
  }
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = dot(a.row(i), b.row(j));
  }
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
  }
  return out;
}

Matrix softmax_rows(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto in = m.row(r);
    auto dst = out.row(r);
    if (in.empty()) continue;
    const double max = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      dst[c] = std::exp(in[c] - max);
      total += dst[c];
    }
    for (double& v : dst) v /= total;
  }
  return out;
}

Matrix softmax_rows_backward(const Matrix& probs, const Matrix& upstream) {
  if (!probs.same_shape(upstream)) {
    throw Error("softmax backward shape mismatch: " + probs.shape_string() + " vs " +
                upstream.shape_string());
  }
  Matrix out(probs.rows(), probs.cols());
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    const double inner = dot(probs.row(r), upstream.row(r));
    for (std::size_t c = 0; c < probs.cols(); ++c) {
      out(r, c) = probs(r, c) * (upstream(r, c) - inner);
    }
  }
  return out;
}

namespace {

void check_layer_norm_dims(std::size_t x, std::size_t gain, std::size_t bias) {
  if (gain != x || bias != x) {
    throw Error("layer_norm dimension mismatch: input " + std::to_string(x) + ", gain " +
                std::to_string(gain) + ", bias " + std::to_string(bias));
  }
}

struct RowStats {
  double mean;
  double inv_std;
};

RowStats row_stats(std::span<const double> x, double eps) {
  if (!(eps > 0.0)) throw Error("layer_norm eps must be positive");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(x.size());
  return {mean, 1.0 / std::sqrt(var + eps)};
}

}  // namespace

Vector layer_norm(std::span<const double> x, std::span<const double> gain,
                  std::span<const double> bias, double eps) {
  check_layer_norm_dims(x.size(), gain.size(), bias.size());
  if (x.empty()) return {};
  const RowStats s = row_stats(x, eps);
  Vector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = gain[i] * (x[i] - s.mean) * s.inv_std + bias[i];
  }
  return out;
}

Vector layer_norm_backward(std::span<const double> x, std::span<const double> gain,
                           double eps, std::span<const double> upstream,
                           std::span<double> gain_grad, std::span<double> bias_grad) {
  check_layer_norm_dims(x.size(), gain.size(), upstream.size());
  check_layer_norm_dims(x.size(), gain_grad.size(), bias_grad.size());
  const std::size_t n = x.size();
  if (n == 0) return {};
  const RowStats s = row_stats(x, eps);
  Vector xhat(n);
  Vector dxhat(n);
  double mean_dxhat = 0.0;
  double mean_dxhat_xhat = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    xhat[i] = (x[i] - s.mean) * s.inv_std;
    dxhat[i] = upstream[i] * gain[i];
    gain_grad[i] += upstream[i] * xhat[i];
    bias_grad[i] += upstream[i];
    mean_dxhat += dxhat[i];
    mean_dxhat_xhat += dxhat[i] * xhat[i];
  }
  mean_dxhat /= static_cast<double>(n);
  mean_dxhat_xhat /= static_cast<double>(n);
  Vector dx(n);
  for (std::size_t i = 0; i < n; ++i) {
    dx[i] = s.inv_std * (dxhat[i] - mean_dxhat - xhat[i] * mean_dxhat_xhat);
  }
  return dx;
}

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double gelu(double x) { return x * standard_normal_cdf(x); }

double gelu_derivative(double x) {
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  return standard_normal_cdf(x) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error("dot dimension mismatch: " + std::to_string(a.size()) + " vs " +
                std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) throw Error("cosine similarity of a zero-norm vector");
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

Vector sinusoidal_pe(std::size_t position, std::size_t dim) {
  if (dim % 2 != 0) {
    throw Error("sinusoidal positional encoding needs an even width, got " + std::to_string(dim));
  }
  Vector pe(dim);
  const double pos = static_cast<double>(position);
  for (std::size_t i = 0; i < dim; i += 2) {
    const double rate = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(dim));
    pe[i] = std::sin(pos * rate);
    pe[i + 1] = std::cos(pos * rate);
  }
  return pe;
}

Vector finite_diff_gradient(const std::function<double(std::span<const double>)>& f,
                            std::span<const double> theta, double h) {
  if (!(h > 0.0)) throw Error("finite difference step must be positive");
  Vector work(theta.begin(), theta.end());
  Vector grad(theta.size());
  for (std::size_t i = 0; i < work.size(); ++i) {
    const double saved = work[i];
    work[i] = saved + h;
    const double plus = f(work);
    work[i] = saved - h;
    const double minus = f(work);
    work[i] = saved;
    grad[i] = (plus - minus) / (2.0 * h);
  }
  return grad;
}

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

double max_relative_error(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("max_relative_error length mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, relative_error(a[i], b[i]));
  return worst;
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace c2sw

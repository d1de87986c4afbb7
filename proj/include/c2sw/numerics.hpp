#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace c2sw {

using Vector = std::vector<double>;

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);
  static Matrix row_vector(std::span<const double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  void set_zero();
  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  std::string shape_string() const;

  Matrix& operator+=(const Matrix& other);
  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
// a^T * b and a * b^T without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);

// Row-wise softmax, stabilized by subtracting the row maximum.
Matrix softmax_rows(const Matrix& m);
// Gradient of the row-wise softmax given its output and the upstream gradient.
Matrix softmax_rows_backward(const Matrix& probs, const Matrix& upstream);

inline constexpr double kDefaultLayerNormEps = 1e-5;

// gain * (x - mean) / sqrt(var + eps) + bias, population variance.
Vector layer_norm(std::span<const double> x, std::span<const double> gain,
                  std::span<const double> bias, double eps = kDefaultLayerNormEps);

// Backward pass of layer_norm for a single row. Returns dL/dx and accumulates
// the gain and bias gradients into the given spans.
Vector layer_norm_backward(std::span<const double> x, std::span<const double> gain,
                           double eps, std::span<const double> upstream,
                           std::span<double> gain_grad, std::span<double> bias_grad);

// Exact GELU, x * Phi(x).
double gelu(double x);
double gelu_derivative(double x);
double standard_normal_cdf(double x);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);

// Throws c2sw::Error when either vector has zero norm.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

// Sine at even slots, cosine at odd slots, wavelength base 10000.
Vector sinusoidal_pe(std::size_t position, std::size_t dim);

// Central differences (f(theta + h) - f(theta - h)) / 2h per coordinate.
Vector finite_diff_gradient(const std::function<double(std::span<const double>)>& f,
                            std::span<const double> theta, double h);

// |a - b| / max(1, |a|, |b|)
double relative_error(double a, double b);
double max_relative_error(std::span<const double> a, std::span<const double> b);

bool all_finite(std::span<const double> values);

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

}  // namespace c2sw

#include "sifter/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "sifter/error.hpp"

namespace sifter {

Tensor Tensor::vector(std::size_t len, double fill) { return Tensor(1, len, 1, fill); }

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, double fill) {
  return Tensor(2, rows, cols, fill);
}

Tensor Tensor::of(std::initializer_list<double> values) {
  Tensor t = vector(values.size());
  std::copy(values.begin(), values.end(), t.data_.begin());
  return t;
}

Tensor Tensor::of_rows(std::initializer_list<std::initializer_list<double>> rows) {
  std::size_t cols = rows.size() == 0 ? 0 : rows.begin()->size();
  Tensor t = matrix(rows.size(), cols);
  std::size_t r = 0;
  for (const auto& row : rows) {
    if (row.size() != cols) {
      throw ShapeError("ragged matrix literal");
    }
    std::copy(row.begin(), row.end(), t.data_.begin() + static_cast<std::ptrdiff_t>(r * cols));
    ++r;
  }
  return t;
}

Tensor Tensor::from_data(std::vector<std::size_t> dims, std::vector<double> data) {
  Tensor t;
  if (dims.size() == 1) {
    t = vector(dims[0]);
  } else if (dims.size() == 2) {
    t = matrix(dims[0], dims[1]);
  } else {
    throw ShapeError("tensor rank must be 1 or 2, got " + std::to_string(dims.size()));
  }
  if (data.size() != t.size()) {
    throw ShapeError("payload of " + std::to_string(data.size()) +
                     " values does not fill shape " + t.shape_string());
  }
  t.data_ = std::move(data);
  return t;
}

std::vector<std::size_t> Tensor::dims() const {
  if (rank_ == 1) return {rows_};
  return {rows_, cols_};
}

std::string Tensor::shape_string() const {
  std::ostringstream out;
  if (rank_ == 1) {
    out << "(" << rows_ << ")";
  } else {
    out << "(" << rows_ << "x" << cols_ << ")";
  }
  return out.str();
}

Tensor Tensor::row_vector(std::size_t r) const {
  Tensor v = vector(cols_);
  std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(r * cols_), cols_, v.data_.begin());
  return v;
}

void Tensor::set_row(std::size_t r, const Tensor& v) {
  if (v.size() != cols_) {
    throw ShapeError("set_row: row of " + shape_string() + " cannot take " + v.shape_string());
  }
  std::copy(v.data_.begin(), v.data_.end(), data_.begin() + static_cast<std::ptrdiff_t>(r * cols_));
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                     b.shape_string());
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ for " + a.shape_string() + " x " +
                     b.shape_string());
  }
  const std::size_t n = a.rows();
  const std::size_t k = a.cols();
  const std::size_t m = b.cols();
  Tensor out = b.rank() == 1 ? Tensor::vector(n) : Tensor::matrix(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        acc += a[i * k + p] * b[p * m + j];
      }
      out[i * m + j] = acc;
    }
  }
  return out;
}

Tensor matmul_transposed(const Tensor& a, const Tensor& v) {
  if (v.rank() != 1 || a.rows() != v.size()) {
    throw ShapeError("matmul_transposed: cannot multiply transpose of " + a.shape_string() +
                     " by " + v.shape_string());
  }
  const std::size_t n = a.rows();
  const std::size_t m = a.cols();
  Tensor out = Tensor::vector(m);
  for (std::size_t i = 0; i < n; ++i) {
    const double vi = v[i];
    for (std::size_t j = 0; j < m; ++j) {
      out[j] += a[i * m + j] * vi;
    }
  }
  return out;
}

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

template <typename F>
Tensor map(const Tensor& t, F f) {
  Tensor out = t;
  for (double& x : out.data()) x = f(x);
  return out;
}

template <typename F>
Tensor zip(const Tensor& a, const Tensor& b, const char* op, F f) {
  require_same_shape(a, b, op);
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(a[i], b[i]);
  return out;
}

}  // namespace

Tensor sigmoid(const Tensor& t) { return map(t, [](double x) { return sigmoid(x); }); }

Tensor tanh(const Tensor& t) { return map(t, [](double x) { return std::tanh(x); }); }

Tensor hadamard(const Tensor& a, const Tensor& b) {
  return zip(a, b, "hadamard", [](double x, double y) { return x * y; });
}

Tensor add(const Tensor& a, const Tensor& b) {
  return zip(a, b, "add", [](double x, double y) { return x + y; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return zip(a, b, "sub", [](double x, double y) { return x - y; });
}

Tensor scale(const Tensor& t, double s) { return map(t, [s](double x) { return x * s; }); }

Tensor softmax(const Tensor& logits) {
  if (logits.empty() || logits.rank() != 1) {
    throw ValidationError("softmax: expected a nonempty vector, got " + logits.shape_string());
  }
  const auto values = logits.data();
  const double peak = *std::max_element(values.begin(), values.end());
  Tensor out = Tensor::vector(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    total += out[i];
  }
  for (double& x : out.data()) x /= total;
  return out;
}

double dot(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) {
    throw ShapeError("dot: shape mismatch " + a.shape_string() + " vs " + b.shape_string());
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double sum_squares(const Tensor& t) {
  double acc = 0.0;
  for (double x : t.data()) acc += x * x;
  return acc;
}

double norm(const Tensor& v) { return std::sqrt(sum_squares(v)); }

Tensor l2_normalize(const Tensor& v) {
  const double n = norm(v);
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw DegenerateInputError("l2_normalize: vector has zero or non-finite norm");
  }
  return scale(v, 1.0 / n);
}

void add_inplace(Tensor& dst, const Tensor& src) {
  require_same_shape(dst, src, "add_inplace");
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void axpy(double alpha, const Tensor& x, Tensor& y) {
  require_same_shape(x, y, "axpy");
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

void add_outer(Tensor& dst, const Tensor& a, const Tensor& b) {
  if (dst.rows() != a.size() || dst.cols() != b.size()) {
    throw ShapeError("add_outer: " + dst.shape_string() + " cannot take " + a.shape_string() +
                     " x " + b.shape_string());
  }
  const std::size_t m = b.size();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ai = a[i];
    if (ai == 0.0) continue;
    for (std::size_t j = 0; j < m; ++j) dst[i * m + j] += ai * b[j];
  }
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t Rng::next_u64() {
  ++counter_;
  return mix64(seed_ ^ mix64(counter_));
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw ValidationError("Rng::below: empty range");
  // Rejection keeps the draw unbiased for every n.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % n;
}

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Rng Rng::fork(std::uint64_t stream) const {
  return Rng(mix64(seed_ ^ mix64(stream ^ 0xD1B54A32D192ED03ULL)));
}

void check_dropout_rate(double p) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw ValidationError("dropout rate must lie in [0, 1), got " + std::to_string(p));
  }
}

DropoutMask DropoutMask::identity(const Tensor& like) {
  DropoutMask m;
  m.mask = like;
  m.mask.fill(1.0);
  return m;
}

DropoutMask DropoutMask::sample(const Tensor& like, double rate, Rng& rng) {
  check_dropout_rate(rate);
  if (rate == 0.0) return identity(like);
  DropoutMask m;
  m.rate = rate;
  m.mask = like;
  const double keep_scale = 1.0 / (1.0 - rate);
  for (double& x : m.mask.data()) x = rng.uniform() < rate ? 0.0 : keep_scale;
  return m;
}

Tensor DropoutMask::apply(const Tensor& t) const {
  if (rate == 0.0) return t;
  return hadamard(t, mask);
}

Tensor dropout(const Tensor& t, double p, Rng& rng, bool train_mode) {
  check_dropout_rate(p);
  if (!train_mode || p == 0.0) return t;
  return DropoutMask::sample(t, p, rng).apply(t);
}

}  // namespace sifter

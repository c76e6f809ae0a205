#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace sifter {

/// Dense row-major array of rank 1 (vector) or rank 2 (matrix).
///
/// A rank-1 tensor of length n behaves as an n x 1 column wherever a matrix
/// is expected, so `matmul(W, x)` works for both matrices and vectors.
class Tensor {
 public:
  Tensor() = default;

  static Tensor vector(std::size_t len, double fill = 0.0);
  static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  static Tensor of(std::initializer_list<double> values);
  static Tensor of_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor from_data(std::vector<std::size_t> dims, std::vector<double> data);

  std::size_t rank() const { return rank_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  std::vector<std::size_t> dims() const;
  std::string shape_string() const;
  bool same_shape(const Tensor& other) const {
    return rank_ == other.rank_ && rows_ == other.rows_ && cols_ == other.cols_;
  }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  Tensor row_vector(std::size_t r) const;
  void set_row(std::size_t r, const Tensor& v);

  void fill(double value);
  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Tensor(std::size_t rank, std::size_t rows, std::size_t cols, double fill)
      : rank_(rank), rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rank_ = 1;
  std::size_t rows_ = 0;
  std::size_t cols_ = 1;
  std::vector<double> data_;
};

// Elementwise and linear-algebra primitives. Binary ops require identical
// shapes and throw ShapeError naming both shapes otherwise. Reductions
// accumulate left to right so results are reproducible bit for bit.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor matmul_transposed(const Tensor& a, const Tensor& v);  // aᵀ·v, v rank 1
Tensor sigmoid(const Tensor& t);
Tensor tanh(const Tensor& t);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& t, double s);
Tensor softmax(const Tensor& logits);
Tensor l2_normalize(const Tensor& v);
double dot(const Tensor& a, const Tensor& b);
double norm(const Tensor& v);
double sum_squares(const Tensor& t);

double sigmoid(double x);

// In-place accumulation helpers used by the hand-written backward passes.
void add_inplace(Tensor& dst, const Tensor& src);
void axpy(double alpha, const Tensor& x, Tensor& y);      // y += alpha·x
void add_outer(Tensor& dst, const Tensor& a, const Tensor& b);  // dst += a·bᵀ

void require_same_shape(const Tensor& a, const Tensor& b, const char* op);

/// Counter-based splittable generator (SplitMix64 finalizer over a
/// seed-keyed counter). The stream depends only on the seed, so results are
/// identical across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64();
  double uniform();                        // [0, 1)
  double uniform(double lo, double hi);    // [lo, hi)
  std::uint64_t below(std::uint64_t n);    // [0, n), unbiased
  double normal();

  /// Independent child stream keyed by `stream`. Does not advance this one.
  Rng fork(std::uint64_t stream) const;

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x);

/// Inverted-dropout mask: entries are 0 or 1/(1-p).
struct DropoutMask {
  double rate = 0.0;
  Tensor mask;

  static DropoutMask identity(const Tensor& like);
  static DropoutMask sample(const Tensor& like, double rate, Rng& rng);
  Tensor apply(const Tensor& t) const;
};

/// Train mode: each entry zeroed with probability p, survivors scaled by
/// 1/(1-p). Eval mode or p == 0: identity, and no randomness is consumed.
Tensor dropout(const Tensor& t, double p, Rng& rng, bool train_mode);

void check_dropout_rate(double p);

}  // namespace sifter

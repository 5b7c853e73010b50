#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "ripforge/errors.hpp"

namespace ripforge {

using Complex = std::complex<double>;
using Vec = std::vector<double>;

namespace detail {

template <class T>
struct is_complex : std::false_type {};
template <class T>
struct is_complex<std::complex<T>> : std::true_type {};

inline bool finite(double v) { return std::isfinite(v); }
inline bool finite(const Complex& v) {
  return std::isfinite(v.real()) && std::isfinite(v.imag());
}

inline std::string shape_str(std::size_t r, std::size_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace detail

/// Dense row-major matrix. Element (i, j) lives at data()[i * cols() + j].
template <class T>
class BasicMatrix {
 public:
  using value_type = T;

  BasicMatrix() = default;

  BasicMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, T{}) {}

  BasicMatrix(std::size_t rows, std::size_t cols, T fill)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    if (!detail::finite(fill)) {
      throw NumericalError("matrix fill value is not finite");
    }
  }

  /// Takes ownership of a row-major payload; rejects wrong sizes and NaN/Inf.
  BasicMatrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw DimensionError("payload of " + std::to_string(data_.size()) +
                           " entries does not fit a " +
                           detail::shape_str(rows_, cols_) + " matrix");
    }
    for (const auto& v : data_) {
      if (!detail::finite(v)) {
        throw NumericalError("matrix payload contains a non-finite entry");
      }
    }
  }

  BasicMatrix(std::initializer_list<std::initializer_list<T>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) {
        throw DimensionError("ragged initializer list");
      }
      for (const auto& v : r) {
        if (!detail::finite(v)) {
          throw NumericalError("matrix initializer contains a non-finite entry");
        }
        data_.push_back(v);
      }
    }
  }

  static BasicMatrix identity(std::size_t n) {
    BasicMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
    return m;
  }

  static BasicMatrix diagonal(std::span<const double> d) {
    BasicMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = T(d[i]);
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  bool is_square() const noexcept { return rows_ == cols_; }

  T& operator()(std::size_t i, std::size_t j) noexcept {
    return data_[i * cols_ + j];
  }
  const T& operator()(std::size_t i, std::size_t j) const noexcept {
    return data_[i * cols_ + j];
  }

  std::span<T> row(std::size_t i) noexcept {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<const T> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }

  std::vector<T> col(std::size_t j) const {
    std::vector<T> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
    return out;
  }

  void set_col(std::size_t j, std::span<const T> v) {
    for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
  }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](const T& v) { return detail::finite(v); });
  }

  BasicMatrix& operator+=(const BasicMatrix& o) {
    require_same_shape(o, "+=");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }
  BasicMatrix& operator-=(const BasicMatrix& o) {
    require_same_shape(o, "-=");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }
  BasicMatrix& operator*=(T s) {
    for (auto& v : data_) v *= s;
    return *this;
  }

  bool operator==(const BasicMatrix& o) const = default;

  void require_same_shape(const BasicMatrix& o, const char* op) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) {
      throw DimensionError(std::string("shape mismatch in ") + op + ": " +
                           detail::shape_str(rows_, cols_) + " vs " +
                           detail::shape_str(o.rows_, o.cols_));
    }
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using Mat = BasicMatrix<double>;
using CMat = BasicMatrix<Complex>;

template <class T>
BasicMatrix<T> operator+(BasicMatrix<T> a, const BasicMatrix<T>& b) {
  a += b;
  return a;
}
template <class T>
BasicMatrix<T> operator-(BasicMatrix<T> a, const BasicMatrix<T>& b) {
  a -= b;
  return a;
}
template <class T>
BasicMatrix<T> operator-(BasicMatrix<T> a) {
  a *= T{-1};
  return a;
}
template <class T>
BasicMatrix<T> operator*(BasicMatrix<T> a, T s) {
  a *= s;
  return a;
}
template <class T>
BasicMatrix<T> operator*(T s, BasicMatrix<T> a) {
  a *= s;
  return a;
}

template <class T>
BasicMatrix<T> transpose(const BasicMatrix<T>& a) {
  BasicMatrix<T> t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  }
  return t;
}

/// Conjugate transpose.
inline CMat adjoint(const CMat& a) {
  CMat t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = std::conj(a(i, j));
  }
  return t;
}

namespace detail {

inline void require_inner(std::size_t ac, std::size_t br, std::size_t ar,
                          std::size_t bc) {
  if (ac != br) {
    throw DimensionError("cannot multiply " + shape_str(ar, ac) + " by " +
                         shape_str(br, bc));
  }
}

// c += a * b on raw row-major buffers; i-k-j order keeps the inner loop
// contiguous in both b and c.
inline void gemm_accumulate(const double* a, const double* b, double* c,
                            std::size_t m, std::size_t k, std::size_t n,
                            double alpha) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = alpha * arow[p];
      if (aip == 0.0) continue;
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

}  // namespace detail

inline Mat matmul(const Mat& a, const Mat& b) {
  detail::require_inner(a.cols(), b.rows(), a.rows(), b.cols());
  Mat c(a.rows(), b.cols());
  detail::gemm_accumulate(a.data().data(), b.data().data(), c.data().data(),
                          a.rows(), a.cols(), b.cols(), 1.0);
  return c;
}

/// a^T * b without forming the transpose.
inline Mat matmul_tn(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("cannot multiply transpose of " +
                         detail::shape_str(a.rows(), a.cols()) + " by " +
                         detail::shape_str(b.rows(), b.cols()));
  }
  Mat c(a.cols(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t p = 0; p < a.rows(); ++p) {
    const double* brow = &b(p, 0);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double api = a(p, i);
      if (api == 0.0) continue;
      double* crow = &c(i, 0);
      for (std::size_t j = 0; j < n; ++j) crow[j] += api * brow[j];
    }
  }
  return c;
}

/// a * b^T without forming the transpose.
inline Mat matmul_nt(const Mat& a, const Mat& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("cannot multiply " +
                         detail::shape_str(a.rows(), a.cols()) +
                         " by transpose of " +
                         detail::shape_str(b.rows(), b.cols()));
  }
  Mat c(a.rows(), b.rows());
  const std::size_t k = a.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* arow = &a(i, 0);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* brow = &b(j, 0);
      // Four independent partial sums break the add dependency chain.
      double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
      std::size_t p = 0;
      for (; p + 4 <= k; p += 4) {
        s0 += arow[p] * brow[p];
        s1 += arow[p + 1] * brow[p + 1];
        s2 += arow[p + 2] * brow[p + 2];
        s3 += arow[p + 3] * brow[p + 3];
      }
      for (; p < k; ++p) s0 += arow[p] * brow[p];
      c(i, j) = (s0 + s1) + (s2 + s3);
    }
  }
  return c;
}

inline Mat real_part(const CMat& a) {
  Mat r(a.rows(), a.cols());
  for (std::size_t k = 0; k < a.size(); ++k) r.data()[k] = a.data()[k].real();
  return r;
}

inline Mat imag_part(const CMat& a) {
  Mat r(a.rows(), a.cols());
  for (std::size_t k = 0; k < a.size(); ++k) r.data()[k] = a.data()[k].imag();
  return r;
}

inline CMat make_complex(const Mat& re, const Mat& im) {
  re.require_same_shape(im, "make_complex");
  CMat c(re.rows(), re.cols());
  for (std::size_t k = 0; k < re.size(); ++k) {
    c.data()[k] = Complex(re.data()[k], im.data()[k]);
  }
  return c;
}

inline CMat to_complex(const Mat& re) { return make_complex(re, Mat(re.rows(), re.cols())); }

// Complex products go through real kernels: std::complex multiplication
// carries NaN-recovery branches that defeat vectorization.
inline CMat matmul(const CMat& a, const Mat& b) {
  return make_complex(matmul(real_part(a), b), matmul(imag_part(a), b));
}

inline CMat matmul(const Mat& a, const CMat& b) {
  return make_complex(matmul(a, real_part(b)), matmul(a, imag_part(b)));
}

inline CMat matmul(const CMat& a, const CMat& b) {
  const Mat ar = real_part(a), ai = imag_part(a);
  const Mat br = real_part(b), bi = imag_part(b);
  Mat re = matmul(ar, br);
  re -= matmul(ai, bi);
  Mat im = matmul(ar, bi);
  im += matmul(ai, br);
  return make_complex(re, im);
}

template <class T, class U>
auto operator*(const BasicMatrix<T>& a, const BasicMatrix<U>& b) {
  return matmul(a, b);
}

inline Vec matvec(const Mat& a, std::span<const double> x) {
  if (a.cols() != x.size()) {
    throw DimensionError("matvec: " + detail::shape_str(a.rows(), a.cols()) +
                         " times vector of length " + std::to_string(x.size()));
  }
  Vec y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* arow = &a(i, 0);
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += arow[j] * x[j];
    y[i] = s;
  }
  return y;
}

/// a^T x.
inline Vec matvec_t(const Mat& a, std::span<const double> x) {
  if (a.rows() != x.size()) {
    throw DimensionError("matvec_t: transpose of " +
                         detail::shape_str(a.rows(), a.cols()) +
                         " times vector of length " + std::to_string(x.size()));
  }
  Vec y(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const double* arow = &a(i, 0);
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] += arow[j] * xi;
  }
  return y;
}

template <class T>
double frobenius_norm(const BasicMatrix<T>& a) {
  // Scaled accumulation; entries here never get near overflow, but squared
  // sums of 1e-200 entries do underflow.
  double scale = 0.0, ssq = 1.0;
  for (const auto& v : a.data()) {
    const double av = std::abs(v);
    if (av == 0.0) continue;
    if (scale < av) {
      ssq = 1.0 + ssq * (scale / av) * (scale / av);
      scale = av;
    } else {
      ssq += (av / scale) * (av / scale);
    }
  }
  return scale * std::sqrt(ssq);
}

template <class T>
double max_abs(const BasicMatrix<T>& a) {
  double m = 0.0;
  for (const auto& v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

inline double trace(const Mat& a) {
  double t = 0.0;
  for (std::size_t i = 0; i < std::min(a.rows(), a.cols()); ++i) t += a(i, i);
  return t;
}

/// Frobenius inner product <a, b> = tr(a^T b).
inline double inner(const Mat& a, const Mat& b) {
  a.require_same_shape(b, "inner");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a.data()[k] * b.data()[k];
  return s;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double norm1(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += std::abs(v);
  return s;
}

/// ||a a^T - I||_F, the orthonormality defect of the rows of a.
inline double orthonormality_defect(const Mat& a) {
  Mat g = matmul_nt(a, a);
  for (std::size_t i = 0; i < g.rows(); ++i) g(i, i) -= 1.0;
  return frobenius_norm(g);
}

template <class T>
BasicMatrix<T> select_rows(const BasicMatrix<T>& a,
                           std::span<const std::size_t> idx) {
  BasicMatrix<T> out(idx.size(), a.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= a.rows()) throw DimensionError("row index out of range");
    std::copy(a.row(idx[r]).begin(), a.row(idx[r]).end(), out.row(r).begin());
  }
  return out;
}

template <class T>
BasicMatrix<T> select_cols(const BasicMatrix<T>& a,
                           std::span<const std::size_t> idx) {
  BasicMatrix<T> out(a.rows(), idx.size());
  for (std::size_t c = 0; c < idx.size(); ++c) {
    if (idx[c] >= a.cols()) throw DimensionError("column index out of range");
    for (std::size_t i = 0; i < a.rows(); ++i) out(i, c) = a(i, idx[c]);
  }
  return out;
}

template <class T>
BasicMatrix<T> block(const BasicMatrix<T>& a, std::size_t r0, std::size_t c0,
                     std::size_t nr, std::size_t nc) {
  if (r0 + nr > a.rows() || c0 + nc > a.cols()) {
    throw DimensionError("block out of range");
  }
  BasicMatrix<T> out(nr, nc);
  for (std::size_t i = 0; i < nr; ++i) {
    for (std::size_t j = 0; j < nc; ++j) out(i, j) = a(r0 + i, c0 + j);
  }
  return out;
}

template <class T>
BasicMatrix<T> hcat(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  if (a.empty() && a.rows() == 0) return b;
  if (b.cols() == 0) return a;
  if (a.rows() != b.rows()) throw DimensionError("hcat: row counts differ");
  BasicMatrix<T> out(a.rows(), a.cols() + b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    std::copy(a.row(i).begin(), a.row(i).end(), out.row(i).begin());
    std::copy(b.row(i).begin(), b.row(i).end(),
              out.row(i).begin() + static_cast<std::ptrdiff_t>(a.cols()));
  }
  return out;
}

/// Columns of a scaled so each has unit Euclidean norm; zero columns stay zero.
inline Mat normalize_columns(Mat a) {
  for (std::size_t j = 0; j < a.cols(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) s += a(i, j) * a(i, j);
    s = std::sqrt(s);
    if (s == 0.0) continue;
    for (std::size_t i = 0; i < a.rows(); ++i) a(i, j) /= s;
  }
  return a;
}

}  // namespace ripforge

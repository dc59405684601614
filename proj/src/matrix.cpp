#include "ssnmf/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ssnmf/errors.hpp"

namespace ssnmf {

namespace {

std::string shape(const DenseMatrix& a) {
  return std::to_string(a.rows()) + "x" + std::to_string(a.cols());
}

[[noreturn]] void mismatch(const char* op, const DenseMatrix& a, const DenseMatrix& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " + shape(a) + " and " +
                       shape(b));
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t m = rows.size();
  const std::size_t n = m == 0 ? 0 : rows.begin()->size();
  DenseMatrix out(m, n);
  std::size_t i = 0;
  for (const auto& r : rows) {
    if (r.size() != n) throw DimensionError("from_rows: ragged initializer");
    std::size_t j = 0;
    for (double v : r) out(i, j++) = v;
    ++i;
  }
  return out;
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

std::vector<double> DenseMatrix::row(std::size_t i) const {
  std::vector<double> out(cols_);
  for (std::size_t j = 0; j < cols_; ++j) out[j] = (*this)(i, j);
  return out;
}

void DenseMatrix::set_row(std::size_t i, std::span<const double> values) {
  for (std::size_t j = 0; j < cols_; ++j) (*this)(i, j) = values[j];
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix out(cols_, rows_);
  for (std::size_t j = 0; j < cols_; ++j)
    for (std::size_t i = 0; i < rows_; ++i) out(j, i) = (*this)(i, j);
  return out;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) mismatch("matmul", a, b);
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j) {
    auto cj = c.col(j);
    for (std::size_t l = 0; l < a.cols(); ++l) {
      const double blj = b(l, j);
      const auto al = a.col(l);
      for (std::size_t i = 0; i < a.rows(); ++i) cj[i] += al[i] * blj;
    }
  }
  return c;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) mismatch("matmul_tn", a, b);
  DenseMatrix c(a.cols(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j) {
    const auto bj = b.col(j);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const auto ai = a.col(i);
      double s = 0.0;
      for (std::size_t l = 0; l < a.rows(); ++l) s += ai[l] * bj[l];
      c(i, j) = s;
    }
  }
  return c;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) mismatch("matmul_nt", a, b);
  DenseMatrix c(a.rows(), b.rows());
  for (std::size_t j = 0; j < b.rows(); ++j) {
    auto cj = c.col(j);
    for (std::size_t l = 0; l < a.cols(); ++l) {
      const double bjl = b(j, l);
      const auto al = a.col(l);
      for (std::size_t i = 0; i < a.rows(); ++i) cj[i] += al[i] * bjl;
    }
  }
  return c;
}

double frobenius_norm(const DenseMatrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

double frobenius_error(const DenseMatrix& x, const DenseMatrix& w, const DenseMatrix& h) {
  if (w.cols() != h.rows()) mismatch("frobenius_error", w, h);
  if (x.rows() != w.rows() || x.cols() != h.cols()) mismatch("frobenius_error", x, w);
  std::vector<double> col(x.rows());
  double s = 0.0;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    std::fill(col.begin(), col.end(), 0.0);
    for (std::size_t l = 0; l < w.cols(); ++l) {
      const double hlj = h(l, j);
      const auto wl = w.col(l);
      for (std::size_t i = 0; i < x.rows(); ++i) col[i] += wl[i] * hlj;
    }
    const auto xj = x.col(j);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const double r = xj[i] - col[i];
      s += r * r;
    }
  }
  return std::sqrt(s);
}

double frobenius_error(const DenseMatrix& x, const DenseMatrix& w, const DenseMatrix& d,
                       const DenseMatrix& h) {
  return frobenius_error(x, matmul(w, d), h);
}

ColumnNormalization column_normalize(const DenseMatrix& w) {
  ColumnNormalization out{w, std::vector<double>(w.cols())};
  for (std::size_t j = 0; j < w.cols(); ++j) {
    auto cj = out.normalized.col(j);
    const double n = norm2(cj);
    if (!(n > 0.0)) {
      throw DegenerateColumnError("column_normalize: column " + std::to_string(j) +
                                  " has zero norm");
    }
    for (double& v : cj) v /= n;
    out.scales[j] = n;
  }
  return out;
}

void scale_rows(DenseMatrix& h, std::span<const double> scales) {
  if (scales.size() != h.rows()) {
    throw DimensionError("scale_rows: " + std::to_string(scales.size()) + " scales for " +
                         std::to_string(h.rows()) + " rows");
  }
  for (std::size_t j = 0; j < h.cols(); ++j) {
    auto hj = h.col(j);
    for (std::size_t i = 0; i < h.rows(); ++i) hj[i] *= scales[i];
  }
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) mismatch("max_abs_diff", a, b);
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

bool is_nonnegative(const DenseMatrix& a) noexcept {
  return std::all_of(a.data().begin(), a.data().end(), [](double v) { return v >= 0.0; });
}

void require_nonnegative(const DenseMatrix& a, std::string_view what) {
  for (std::size_t j = 0; j < a.cols(); ++j) {
    for (std::size_t i = 0; i < a.rows(); ++i) {
      if (!(a(i, j) >= 0.0)) {
        std::ostringstream msg;
        msg << what << ": entry (" << i << ", " << j << ") = " << a(i, j) << " is negative";
        throw NegativityError(msg.str());
      }
    }
  }
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm1(std::span<const double> a) noexcept {
  double s = 0.0;
  for (double v : a) s += std::abs(v);
  return s;
}

double norm2(std::span<const double> a) noexcept { return std::sqrt(dot(a, a)); }

}  // namespace ssnmf

#ifndef SSNMF_MATRIX_HPP
#define SSNMF_MATRIX_HPP

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

namespace ssnmf {

/**
 * Dense column-major matrix of doubles.
 *
 * Holds the data matrix X (m x n) and the factors W (m x r), H (r x n) and
 * D (r x r). Columns are contiguous, so column views are plain spans.
 */
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);

  /// Builds a matrix from row-wise nested lists; all rows must have equal length.
  static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[j * rows_ + i]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[j * rows_ + i]; }

  std::span<double> col(std::size_t j) noexcept { return {data_.data() + j * rows_, rows_}; }
  std::span<const double> col(std::size_t j) const noexcept {
    return {data_.data() + j * rows_, rows_};
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  /// Copies row i into a fresh vector (rows are strided).
  std::vector<double> row(std::size_t i) const;
  void set_row(std::size_t i, std::span<const double> values);

  DenseMatrix transposed() const;

  bool operator==(const DenseMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// A * B with a fixed accumulation order (inner index ascending).
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
/// A^T * B without materializing the transpose.
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
/// A * B^T without materializing the transpose.
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);

double frobenius_norm(const DenseMatrix& a);

/// ||X - W H||_F.
double frobenius_error(const DenseMatrix& x, const DenseMatrix& w, const DenseMatrix& h);
/// ||X - W D H||_F.
double frobenius_error(const DenseMatrix& x, const DenseMatrix& w, const DenseMatrix& d,
                       const DenseMatrix& h);

struct ColumnNormalization {
  DenseMatrix normalized;
  std::vector<double> scales;  // original column norms
};

/// Scales every column of W to unit L2 norm. Throws DegenerateColumnError on a
/// zero column.
ColumnNormalization column_normalize(const DenseMatrix& w);

/// Multiplies row i of H by scales[i]; paired with column_normalize this keeps WH fixed.
void scale_rows(DenseMatrix& h, std::span<const double> scales);

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);
bool is_nonnegative(const DenseMatrix& a) noexcept;
/// Throws NegativityError naming `what` and the first offending cell.
void require_nonnegative(const DenseMatrix& a, std::string_view what);

double dot(std::span<const double> a, std::span<const double> b) noexcept;
double norm1(std::span<const double> a) noexcept;
double norm2(std::span<const double> a) noexcept;

}  // namespace ssnmf

#endif  // SSNMF_MATRIX_HPP

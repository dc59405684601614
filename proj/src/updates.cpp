#include "ssnmf/updates.hpp"

#include <string>

#include "ssnmf/errors.hpp"

namespace ssnmf {

void UpdateConfig::validate() const {
  if (!(epsilon > 0.0)) throw RangeError("update epsilon must be positive");
  if (inner_repeats < 1) throw RangeError("inner_repeats must be at least 1");
}

namespace {

void check(bool ok, const char* op, const char* what) {
  if (!ok) throw DimensionError(std::string(op) + ": " + what);
}

// target <- target .* numer ./ (denom + eps), element-wise.
void multiplicative_step(DenseMatrix& target, const DenseMatrix& numer, const DenseMatrix& denom,
                         double eps) {
  auto t = target.data();
  const auto n = numer.data();
  const auto d = denom.data();
  for (std::size_t i = 0; i < t.size(); ++i) t[i] *= n[i] / (d[i] + eps);
}

}  // namespace

DenseMatrix nnls_mult(const DenseMatrix& x, const DenseMatrix& w, DenseMatrix h,
                      const UpdateConfig& cfg) {
  cfg.validate();
  check(x.rows() == w.rows(), "nnls_mult", "X and W row counts differ");
  check(w.cols() == h.rows() && x.cols() == h.cols(), "nnls_mult", "H shape mismatch");
  const DenseMatrix wtx = matmul_tn(w, x);
  const DenseMatrix wtw = matmul_tn(w, w);
  for (std::size_t sweep = 0; sweep < cfg.inner_repeats; ++sweep) {
    multiplicative_step(h, wtx, matmul(wtw, h), cfg.epsilon);
  }
  return h;
}

DenseMatrix nnls_mult_w(const DenseMatrix& x, DenseMatrix w, const DenseMatrix& h,
                        const UpdateConfig& cfg) {
  cfg.validate();
  check(x.cols() == h.cols(), "nnls_mult_w", "X and H column counts differ");
  check(w.cols() == h.rows() && x.rows() == w.rows(), "nnls_mult_w", "W shape mismatch");
  const DenseMatrix xht = matmul_nt(x, h);
  const DenseMatrix hht = matmul_nt(h, h);
  for (std::size_t sweep = 0; sweep < cfg.inner_repeats; ++sweep) {
    multiplicative_step(w, xht, matmul(w, hht), cfg.epsilon);
  }
  return w;
}

DenseMatrix diag_mult(const DenseMatrix& x, const DenseMatrix& w, const DenseMatrix& h,
                      DenseMatrix d, bool diagonal_only, const UpdateConfig& cfg) {
  cfg.validate();
  const std::size_t r = w.cols();
  check(d.rows() == r && d.cols() == r, "diag_mult", "D must be r x r");
  check(h.rows() == r, "diag_mult", "H row count differs from rank");
  check(x.rows() == w.rows() && x.cols() == h.cols(), "diag_mult", "X shape mismatch");

  const DenseMatrix numer = matmul_nt(matmul_tn(w, x), h);  // W^T X H^T
  const DenseMatrix wtw = matmul_tn(w, w);
  const DenseMatrix hht = matmul_nt(h, h);
  for (std::size_t sweep = 0; sweep < cfg.inner_repeats; ++sweep) {
    if (diagonal_only) {
      // (W^T W D H H^T)_ii = sum_j (W^T W)_ij d_j (H H^T)_ji for diagonal D.
      std::vector<double> denom(r, 0.0);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < r; ++j) denom[i] += wtw(i, j) * d(j, j) * hht(j, i);
      for (std::size_t i = 0; i < r; ++i) d(i, i) *= numer(i, i) / (denom[i] + cfg.epsilon);
    } else {
      multiplicative_step(d, numer, matmul(matmul(wtw, d), hht), cfg.epsilon);
    }
  }
  return d;
}

}  // namespace ssnmf

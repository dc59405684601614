#ifndef SSNMF_UPDATES_HPP
#define SSNMF_UPDATES_HPP

#include <cstddef>

#include "ssnmf/matrix.hpp"

namespace ssnmf {

struct UpdateConfig {
  double epsilon = 1e-9;          // added to every denominator
  std::size_t inner_repeats = 1;  // multiplicative sweeps per call

  void validate() const;
};

/// H <- H .* (W^T X) ./ (W^T W H + eps), `inner_repeats` times.
DenseMatrix nnls_mult(const DenseMatrix& x, const DenseMatrix& w, DenseMatrix h,
                      const UpdateConfig& cfg = {});

/// W <- W .* (X H^T) ./ (W H H^T + eps). Callers that need unit columns follow
/// up with column_normalize and rescale H.
DenseMatrix nnls_mult_w(const DenseMatrix& x, DenseMatrix w, const DenseMatrix& h,
                        const UpdateConfig& cfg = {});

/// D <- D .* (W^T X H^T) ./ (W^T W D H H^T + eps). With `diagonal_only` the
/// off-diagonal entries are left at zero and only the diagonal is updated.
DenseMatrix diag_mult(const DenseMatrix& x, const DenseMatrix& w, const DenseMatrix& h,
                      DenseMatrix d, bool diagonal_only, const UpdateConfig& cfg = {});

}  // namespace ssnmf

#endif  // SSNMF_UPDATES_HPP

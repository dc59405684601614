#ifndef SSNMF_SPARSITY_HPP
#define SSNMF_SPARSITY_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace ssnmf {

/**
 * Hoyer sparsity of a vector of dimension d:
 *
 *   sp(x) = (sqrt(d) - |x|_1 / |x|_2) / (sqrt(d) - 1)
 *
 * 1 for one-hot vectors, 0 for constant vectors, invariant to positive scaling.
 * Throws UndefinedMeasureError for the zero vector and DimensionError for d < 2.
 */
double sparsity_measure(std::span<const double> x);

/// L1 target on the unit L2 sphere for sparsity alpha: sqrt(m) - alpha (sqrt(m) - 1).
double k_from_alpha(double alpha, std::size_t m);

enum class ConstraintKind { kFree, kEquality, kInterval };

/// Sparsity requirement on one column of W (or one row of H).
struct SparsityConstraint {
  ConstraintKind kind = ConstraintKind::kFree;
  double alpha_lo = 0.0;
  double alpha_hi = 1.0;
  std::size_t dim = 0;
  double k_lo = 0.0;  // L1 target at alpha_lo (the larger one)
  double k_hi = 0.0;  // L1 target at alpha_hi

  /// Unit L2 norm only.
  static SparsityConstraint free(std::size_t dim);
  static SparsityConstraint equality(double alpha, std::size_t dim);
  static SparsityConstraint interval(double alpha_lo, double alpha_hi, std::size_t dim);

  /// Whether sp(y) satisfies the constraint within `tol`. y must be nonzero.
  bool satisfied_by(std::span<const double> y, double tol) const;
};

/// Result of the exact projection. `lambda`/`mu` are the Lagrange multipliers of the
/// L2 and L1 constraints on the chosen support; NaN where they are undefined (the
/// uniform-vector case, where the two constraint gradients are parallel).
struct ProjectionSolution {
  std::vector<double> y;
  std::size_t support_size = 0;
  double lambda = 0.0;
  double mu = 0.0;
  double objective = 0.0;
};

enum class SupportScan {
  kEnumerate,   // evaluate every candidate support size, keep the best feasible one
  kEarlyBreak,  // stop at the first infeasible candidate
};

/**
 * Exact maximizer of b^T y subject to y >= 0, |y|_1 = k, |y|_2 = 1.
 *
 * b is sorted descending (stable); for each support size p >= ceil(k^2) the
 * stationary point of the two equality constraints on the top-p coordinates has a
 * closed form. Among those with nonnegative entries the one with the largest
 * objective is returned, scattered back to the original coordinate order.
 *
 * k must lie in [1, sqrt(m)]; values within 1e-9 of either end are clamped.
 */
ProjectionSolution sparse_opt(std::span<const double> b, double k,
                              SupportScan scan = SupportScan::kEnumerate);

/// Maximizer of b^T y over the nonnegative unit sphere: [b]_+ / |[b]_+|_2, or the
/// first one-hot vector at argmax b when b has no positive entry.
std::vector<double> nonnegative_unit_direction(std::span<const double> b);

/// Maximizer of b^T y over y >= 0, |y|_2 = 1, sp(y) in [alpha_lo, alpha_hi].
ProjectionSolution interval_project(std::span<const double> b, const SparsityConstraint& c);

/// Dispatches on the constraint kind: free, equality (sparse_opt) or interval.
ProjectionSolution project_column(std::span<const double> b, const SparsityConstraint& c);

/**
 * Hoyer's alternating projection onto {y >= 0, |y|_1 = k, |y|_2 = 1}: shift onto the
 * L1 hyperplane, move out to the L2 sphere from the hyperplane midpoint, zero the
 * negative coordinates and repeat on the shrunken active set. Worst case O(m^2).
 *
 * Throws BaselineFailure if it has not converged after m iterations.
 */
std::vector<double> projection_hoyer(std::span<const double> x, double k);

/// Validates k against [1, sqrt(m)] and clamps values within 1e-9 of an end.
double clamp_l1_target(double k, std::size_t m);

}  // namespace ssnmf

#endif  // SSNMF_SPARSITY_HPP

#include "ssnmf/sparsity.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>

#include "ssnmf/errors.hpp"
#include "ssnmf/matrix.hpp"

namespace ssnmf {

namespace {

constexpr double kTargetClampTol = 1e-9;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Support sizes this close to k^2 only admit the uniform vector.
double support_tolerance(double k2) { return 1e-12 * std::max(1.0, k2); }

enum class SupportShape { kUniform, kTwoLevel, kGeneral };

struct Candidate {
  std::size_t p = 0;
  SupportShape shape = SupportShape::kGeneral;
  double objective = -std::numeric_limits<double>::infinity();
};

void require_finite(std::span<const double> b, const char* op) {
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (!std::isfinite(b[i])) {
      throw RangeError(std::string(op) + ": entry " + std::to_string(i) + " is not finite");
    }
  }
}

// Values of b sorted in descending order. Long inputs are sorted by an
// order-preserving unsigned key derived from the IEEE bit pattern: LSD radix
// passes on the high 32 bits, then runs sharing those bits are finished on the
// full key.
std::vector<double> sorted_descending(std::span<const double> b) {
  constexpr std::size_t kRadixThreshold = 512;
  const std::size_t m = b.size();
  if (m < kRadixThreshold) {
    std::vector<double> a(b.begin(), b.end());
    std::sort(a.begin(), a.end(), std::greater<>());
    return a;
  }
  constexpr int kBits = 8;
  constexpr int kFirstDigit = 4;
  constexpr int kDigits = 8;
  constexpr std::size_t kBuckets = std::size_t{1} << kBits;
  constexpr std::uint64_t kSign = std::uint64_t{1} << 63;
  auto keys = std::make_unique_for_overwrite<std::uint64_t[]>(m);
  auto buffer = std::make_unique_for_overwrite<std::uint64_t[]>(m);
  std::array<std::array<std::size_t, kBuckets>, kDigits - kFirstDigit> count{};
  for (std::size_t i = 0; i < m; ++i) {
    const auto u = std::bit_cast<std::uint64_t>(b[i]);
    const std::uint64_t key = ~((u & kSign) ? ~u : (u | kSign));  // larger value -> smaller key
    keys[i] = key;
    for (int d = kFirstDigit; d < kDigits; ++d)
      ++count[d - kFirstDigit][(key >> (d * kBits)) & (kBuckets - 1)];
  }
  for (int d = kFirstDigit; d < kDigits; ++d) {
    const int shift = d * kBits;
    auto& c = count[d - kFirstDigit];
    if (c[(keys[0] >> shift) & (kBuckets - 1)] == m) continue;
    std::size_t total = 0;
    for (auto& slot : c) {
      const std::size_t n = slot;
      slot = total;
      total += n;
    }
    for (std::size_t i = 0; i < m; ++i) buffer[c[(keys[i] >> shift) & (kBuckets - 1)]++] = keys[i];
    keys.swap(buffer);
  }
  for (std::size_t lo = 0; lo < m;) {
    std::size_t hi = lo + 1;
    while (hi < m && (keys[hi] >> 32) == (keys[lo] >> 32)) ++hi;
    if (hi - lo > 1) std::sort(keys.get() + lo, keys.get() + hi);
    lo = hi;
  }
  std::vector<double> a;
  a.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::uint64_t u = ~keys[i];
    a.push_back(std::bit_cast<double>((u & kSign) ? (u & ~kSign) : ~u));
  }
  return a;
}

// Indices of the top-p entries of b under the stable descending order (value
// descending, index ascending), listed in index order. `threshold` is the p-th
// largest value.
std::vector<std::size_t> top_support(std::span<const double> b, std::size_t p,
                                     double threshold) {
  std::size_t greater = 0;
  for (double v : b) greater += v > threshold ? 1 : 0;
  std::size_t ties_needed = p - greater;
  std::vector<std::size_t> support;
  support.reserve(p);
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (b[i] > threshold) {
      support.push_back(i);
    } else if (b[i] == threshold && ties_needed > 0) {
      support.push_back(i);
      --ties_needed;
    }
  }
  return support;
}

}  // namespace

double clamp_l1_target(double k, std::size_t m) {
  if (m == 0) throw DimensionError("L1 target: empty vector");
  const double upper = std::sqrt(static_cast<double>(m));
  if (!std::isfinite(k) || k < 1.0 - kTargetClampTol || k > upper + kTargetClampTol) {
    throw RangeError("L1 target k = " + std::to_string(k) + " outside [1, " +
                     std::to_string(upper) + "] for dimension " + std::to_string(m));
  }
  return std::clamp(k, 1.0, upper);
}

double sparsity_measure(std::span<const double> x) {
  const std::size_t d = x.size();
  if (d < 2) throw DimensionError("sparsity_measure: dimension must be at least 2");
  const double l2 = norm2(x);
  if (!(l2 > 0.0)) throw UndefinedMeasureError("sparsity_measure: zero vector");
  const double sqrt_d = std::sqrt(static_cast<double>(d));
  const double sp = (sqrt_d - norm1(x) / l2) / (sqrt_d - 1.0);
  return std::clamp(sp, 0.0, 1.0);
}

double k_from_alpha(double alpha, std::size_t m) {
  if (m == 0) throw DimensionError("k_from_alpha: dimension must be positive");
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw RangeError("sparsity " + std::to_string(alpha) + " outside [0, 1]");
  }
  const double sqrt_m = std::sqrt(static_cast<double>(m));
  return sqrt_m - alpha * (sqrt_m - 1.0);
}

SparsityConstraint SparsityConstraint::free(std::size_t dim) {
  SparsityConstraint c;
  c.kind = ConstraintKind::kFree;
  c.alpha_lo = 0.0;
  c.alpha_hi = 1.0;
  c.dim = dim;
  c.k_lo = k_from_alpha(0.0, dim);
  c.k_hi = 1.0;
  return c;
}

SparsityConstraint SparsityConstraint::equality(double alpha, std::size_t dim) {
  SparsityConstraint c;
  c.kind = ConstraintKind::kEquality;
  c.alpha_lo = c.alpha_hi = alpha;
  c.dim = dim;
  c.k_lo = c.k_hi = k_from_alpha(alpha, dim);
  return c;
}

SparsityConstraint SparsityConstraint::interval(double alpha_lo, double alpha_hi,
                                                std::size_t dim) {
  SparsityConstraint c;
  c.kind = ConstraintKind::kInterval;
  c.alpha_lo = alpha_lo;
  c.alpha_hi = alpha_hi;
  c.dim = dim;
  c.k_lo = k_from_alpha(alpha_lo, dim);
  c.k_hi = k_from_alpha(alpha_hi, dim);
  if (alpha_lo > alpha_hi) {
    throw RangeError("sparsity interval [" + std::to_string(alpha_lo) + ", " +
                     std::to_string(alpha_hi) + "] is empty");
  }
  return c;
}

bool SparsityConstraint::satisfied_by(std::span<const double> y, double tol) const {
  if (y.size() != dim) throw DimensionError("constraint dimension does not match vector");
  if (kind == ConstraintKind::kFree || dim < 2) return true;
  const double sp = sparsity_measure(y);
  return sp >= alpha_lo - tol && sp <= alpha_hi + tol;
}

ProjectionSolution sparse_opt(std::span<const double> b, double k, SupportScan scan) {
  const std::size_t m = b.size();
  if (m == 0) throw DimensionError("sparse_opt: empty vector");
  require_finite(b, "sparse_opt");
  k = clamp_l1_target(k, m);
  const double k2 = k * k;
  const double p_tol = support_tolerance(k2);

  const std::vector<double> a = sorted_descending(b);

  // Running mean and centered sum of squares (Welford) over the top-p values.
  // On the top-p support the stationary point is y = k/p + c (a - mean) with
  // c = sqrt((1 - k^2/p) / M2), giving objective k mean + c M2.
  Candidate best;
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t p = 1; p <= m; ++p) {
    const double x = a[p - 1];
    const double pd = static_cast<double>(p);
    const double inv_p = 1.0 / pd;
    const double delta = x - mean;
    mean += delta * inv_p;
    m2 += delta * (x - mean);

    if (pd + p_tol < k2) continue;

    Candidate cand{p, SupportShape::kGeneral, 0.0};
    bool feasible = true;
    if (pd - k2 <= p_tol) {
      cand.shape = SupportShape::kUniform;
      cand.objective = mean * std::sqrt(pd);
    } else if (a[0] == x || !(m2 > 0.0)) {
      cand.shape = SupportShape::kTwoLevel;
      cand.objective = k * mean;
    } else {
      const double slack = 1.0 - k2 * inv_p;
      const double c = std::sqrt(slack / m2);
      feasible = (x - mean) * c + k * inv_p >= -1e-12;
      cand.objective = k * mean + c * m2;
    }

    if (!feasible) {
      if (scan == SupportScan::kEarlyBreak) break;
      continue;
    }
    if (scan == SupportScan::kEarlyBreak || cand.objective > best.objective) best = cand;
  }

  const std::size_t p = best.p;
  const double pd = static_cast<double>(p);
  const std::vector<std::size_t> support = top_support(b, p, a[p - 1]);

  ProjectionSolution out;
  out.y.assign(m, 0.0);
  out.support_size = p;
  switch (best.shape) {
    case SupportShape::kUniform: {
      const double level = 1.0 / std::sqrt(pd);
      for (std::size_t i : support) out.y[i] = level;
      out.lambda = kNaN;
      out.mu = kNaN;
      break;
    }
    case SupportShape::kTwoLevel: {
      // Every feasible point on this support has the same objective. Put the
      // first floor(k^2) support coordinates at the high level and the rest at
      // the low level; both constraint equations fix the two levels.
      const auto s = std::clamp<std::size_t>(static_cast<std::size_t>(std::floor(k2)), 1, p - 1);
      const double sd = static_cast<double>(s);
      const double high = (k * sd + std::sqrt(sd * (pd - sd) * (pd - k2))) / (sd * pd);
      const double low = std::max(0.0, (k - sd * high) / (pd - sd));
      for (std::size_t t = 0; t < support.size(); ++t) out.y[support[t]] = t < s ? high : low;
      out.lambda = 0.0;
      out.mu = -a[0];
      break;
    }
    case SupportShape::kGeneral: {
      // Recompute the centered values directly on the support so that the
      // constraint equations hold to rounding even for nearly-tied inputs.
      double sum = 0.0;
      for (std::size_t i : support) sum += b[i];
      const double support_mean = sum / pd;
      std::vector<double> d(p);
      double drift = 0.0;
      for (std::size_t t = 0; t < p; ++t) {
        d[t] = b[support[t]] - support_mean;
        drift += d[t];
      }
      drift /= pd;
      double ss = 0.0;
      for (double& v : d) {
        v -= drift;
        ss += v * v;
      }
      const double c = std::sqrt((1.0 - k2 / pd) / ss);
      for (std::size_t t = 0; t < p; ++t) out.y[support[t]] = std::max(0.0, d[t] * c + k / pd);
      out.lambda = -1.0 / c;
      out.mu = -support_mean - k * out.lambda / pd;
      break;
    }
  }
  out.objective = dot(b, out.y);
  return out;
}

std::vector<double> nonnegative_unit_direction(std::span<const double> b) {
  std::vector<double> y(b.size(), 0.0);
  double ss = 0.0;
  for (double v : b)
    if (v > 0.0) ss += v * v;
  if (ss > 0.0) {
    const double n = std::sqrt(ss);
    for (std::size_t i = 0; i < b.size(); ++i) y[i] = b[i] > 0.0 ? b[i] / n : 0.0;
  } else if (!b.empty()) {
    const auto top = std::max_element(b.begin(), b.end());
    y[static_cast<std::size_t>(top - b.begin())] = 1.0;
  }
  return y;
}

namespace {

ProjectionSolution from_direction(std::span<const double> b, std::vector<double> y) {
  ProjectionSolution out;
  out.support_size = static_cast<std::size_t>(
      std::count_if(y.begin(), y.end(), [](double v) { return v > 0.0; }));
  out.objective = dot(b, y);
  const bool has_positive = std::any_of(b.begin(), b.end(), [](double v) { return v > 0.0; });
  out.lambda = has_positive ? -out.objective : kNaN;
  out.mu = has_positive ? 0.0 : kNaN;
  out.y = std::move(y);
  return out;
}

}  // namespace

ProjectionSolution interval_project(std::span<const double> b, const SparsityConstraint& c) {
  if (c.kind != ConstraintKind::kInterval) {
    throw RangeError("interval_project: constraint is not an interval");
  }
  if (b.size() != c.dim) throw DimensionError("interval_project: constraint dimension mismatch");
  if (b.empty()) throw DimensionError("interval_project: empty vector");
  require_finite(b, "interval_project");
  if (b.size() == 1) return from_direction(b, {1.0});

  std::vector<double> direction = nonnegative_unit_direction(b);
  const double sp = sparsity_measure(direction);
  if (sp < c.alpha_lo) return sparse_opt(b, c.k_lo);
  if (sp > c.alpha_hi) return sparse_opt(b, c.k_hi);
  return from_direction(b, std::move(direction));
}

ProjectionSolution project_column(std::span<const double> b, const SparsityConstraint& c) {
  if (b.size() != c.dim) throw DimensionError("project_column: constraint dimension mismatch");
  switch (c.kind) {
    case ConstraintKind::kEquality:
      return sparse_opt(b, c.k_lo);
    case ConstraintKind::kInterval:
      return interval_project(b, c);
    case ConstraintKind::kFree:
      break;
  }
  require_finite(b, "project_column");
  return from_direction(b, nonnegative_unit_direction(b));
}

}  // namespace ssnmf

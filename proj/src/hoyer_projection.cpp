#include <cmath>
#include <string>
#include <vector>

#include "ssnmf/errors.hpp"
#include "ssnmf/sparsity.hpp"

namespace ssnmf {

std::vector<double> projection_hoyer(std::span<const double> x, double k) {
  const std::size_t m = x.size();
  k = clamp_l1_target(k, m);

  double sum = 0.0;
  for (double v : x) sum += v;
  std::vector<double> s(m);
  const double shift = (k - sum) / static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i) s[i] = x[i] + shift;

  std::vector<char> zeroed(m, 0);
  std::size_t active = m;
  for (std::size_t iter = 0; iter <= m; ++iter) {
    // Move from the midpoint of the active face out to the unit sphere.
    const double mid = k / static_cast<double>(active);
    double aa = 0.0;
    double bb = 0.0;
    double cc = -1.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double w = zeroed[i] ? 0.0 : s[i] - mid;
      aa += w * w;
      bb += 2.0 * w * s[i];
      cc += s[i] * s[i];
    }
    if (!(aa > 1e-300)) {
      if (std::abs(cc) <= 1e-12) return s;
      throw BaselineFailure("projection_hoyer: degenerate direction at the face midpoint");
    }
    const double disc = std::max(0.0, bb * bb - 4.0 * aa * cc);
    const double step = (-bb + std::sqrt(disc)) / (2.0 * aa);

    bool nonnegative = true;
    for (std::size_t i = 0; i < m; ++i) {
      if (zeroed[i]) continue;
      s[i] += step * (s[i] - mid);
      nonnegative = nonnegative && s[i] >= 0.0;
    }
    if (nonnegative) return s;

    // Fix the nonpositive coordinates at zero and shift the rest back onto
    // the L1 hyperplane.
    double kept = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (!zeroed[i] && s[i] <= 0.0) {
        zeroed[i] = 1;
        --active;
      }
      if (zeroed[i]) {
        s[i] = 0.0;
      } else {
        kept += s[i];
      }
    }
    if (active == 0) break;
    const double back = (k - kept) / static_cast<double>(active);
    for (std::size_t i = 0; i < m; ++i)
      if (!zeroed[i]) s[i] += back;
  }
  throw BaselineFailure("projection_hoyer: no feasible point after " + std::to_string(m) +
                        " iterations");
}

}  // namespace ssnmf

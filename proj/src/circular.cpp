#include "circadian/circular.hpp"

#include <algorithm>
#include <limits>
#include <vector>

#include "circadian/errors.hpp"

namespace circadian {

CircularSummary circular_summary(std::span<const double> hours) {
  if (hours.empty()) throw ValidationError("circular summary of an empty sample");
  double sx = 0.0, sy = 0.0;
  const double k = 2.0 * kPi / kDayHours;
  for (double h : hours) {
    sx += std::cos(k * h);
    sy += std::sin(k * h);
  }
  const auto n = static_cast<double>(hours.size());
  CircularSummary out;
  out.mean = wrap_hours(std::atan2(sy, sx) / k);
  out.resultant = std::min(1.0, std::hypot(sx, sy) / n);
  out.sd = out.resultant > 0.0 ? std::sqrt(std::max(0.0, -2.0 * std::log(out.resultant))) / k
                               : std::numeric_limits<double>::infinity();
  return out;
}

bool CircularInterval::contains(double t) const {
  const double w = wrap_hours(t);
  if (lower <= upper) return w >= lower && w <= upper;
  return w >= lower || w <= upper;
}

double CircularInterval::width() const {
  return lower <= upper ? upper - lower : kDayHours - lower + upper;
}

CircularInterval highest_density_arc(std::span<const double> hours, double mass) {
  if (hours.empty()) throw ValidationError("credible interval of an empty sample");
  if (!(mass > 0.0 && mass <= 1.0)) throw ValidationError("interval mass must be in (0, 1]");
  std::vector<double> s(hours.size());
  std::transform(hours.begin(), hours.end(), s.begin(), wrap_hours);
  std::sort(s.begin(), s.end());
  const std::size_t n = s.size();
  const auto k = std::min(n, static_cast<std::size_t>(std::ceil(mass * static_cast<double>(n))));
  if (k == n) {
    // Everything: the complement of the widest gap.
    std::size_t gap_at = n - 1;
    double widest = s[0] + kDayHours - s[n - 1];
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (s[i + 1] - s[i] > widest) {
        widest = s[i + 1] - s[i];
        gap_at = i;
      }
    }
    return {s[(gap_at + 1) % n], s[gap_at]};
  }
  std::size_t best = 0;
  double best_width = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + k - 1;
    const double width = j < n ? s[j] - s[i] : s[j - n] + kDayHours - s[i];
    if (width < best_width) {
      best_width = width;
      best = i;
    }
  }
  return {s[best], s[(best + k - 1) % n]};
}

}  // namespace circadian

#include "gevtrend/fdr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace gevtrend {
namespace {

constexpr double kIterationTolerance = 1e-12;
constexpr int kMaxIterations = 1000;

// Floors a count that is mathematically integral-or-above, absorbing rounding just below an integer.
std::size_t floor_count(double x) { return static_cast<std::size_t>(std::floor(x + 1e-9)); }

void check_level(double q) {
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("FDR level must lie in (0, 1)");
}

}  // namespace

BhSelection bh_select(std::span<const double> pvalues, double q) {
  check_level(q);
  if (pvalues.empty()) throw std::invalid_argument("bh_select: no p-values");
  for (double p : pvalues) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("bh_select: p-value outside [0, 1]");
  }
  const std::size_t m = pvalues.size();
  std::vector<double> sorted(pvalues.begin(), pvalues.end());
  std::sort(sorted.begin(), sorted.end());

  BhSelection sel;
  for (std::size_t i = m; i >= 1; --i) {
    if (sorted[i - 1] <= q * static_cast<double>(i) / static_cast<double>(m)) {
      sel.k = i;
      break;
    }
  }
  sel.rejected.assign(m, false);
  if (sel.k == 0) return sel;
  sel.threshold = sorted[sel.k - 1];
  for (std::size_t i = 0; i < m; ++i) {
    if (pvalues[i] <= sel.threshold) {
      sel.rejected[i] = true;
      ++sel.rejections;
    }
  }
  return sel;
}

double qlim_closed_form(double q, std::size_t m, std::size_t rejections) {
  const double mm = static_cast<double>(m);
  const double s = static_cast<double>(rejections);
  return q * (mm - s) / (mm - q * s);
}

FdrLevels iterate_qlim(double q, std::size_t m, std::size_t rejections) {
  check_level(q);
  if (m == 0 || rejections > m) throw std::invalid_argument("iterate_qlim: need 0 <= S <= m and m > 0");
  const double mm = static_cast<double>(m);
  const double s = static_cast<double>(rejections);

  FdrLevels out;
  double current = q;
  for (int n = 0; n < kMaxIterations; ++n) {
    const double next = q * (mm - (1.0 - current) * s) / mm;
    ++out.iterations;
    const bool done = std::abs(next - current) < kIterationTolerance;
    current = next;
    if (done) break;
  }
  out.q_lim_iterated = current;
  out.q_lim = qlim_closed_form(q, m, rejections);
  out.bound_basic = floor_count((1.0 - q) * s);
  out.bound_iterated = floor_count((1.0 - out.q_lim) * s);
  return out;
}

FdrOutcome control_fdr(std::span<const double> pvalues, double q) {
  const auto sel = bh_select(pvalues, q);
  const auto levels = iterate_qlim(q, pvalues.size(), sel.rejections);
  FdrOutcome out;
  out.q = q;
  out.m = pvalues.size();
  out.k = sel.k;
  out.rejected = sel.rejected;
  out.rejections = sel.rejections;
  out.q_lim = levels.q_lim;
  out.bound_basic = levels.bound_basic;
  out.bound_iterated = levels.bound_iterated;
  return out;
}

}  // namespace gevtrend

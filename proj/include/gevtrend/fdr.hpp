#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gevtrend {

struct BhSelection {
  std::size_t k = 0;           // largest i with p_(i) <= q i / m, 0 if none
  double threshold = 0.0;      // p_(k), or 0 when k == 0
  std::vector<bool> rejected;  // p_i <= p_(k), in input order
  std::size_t rejections = 0;
};

/// Benjamini-Hochberg step-up selection. Ties at p_(k) are all rejected.
/// Throws std::invalid_argument on empty input, p outside [0, 1] or q outside (0, 1).
BhSelection bh_select(std::span<const double> pvalues, double q);

struct FdrLevels {
  double q_lim = 0.0;           // fixed point q (m - S) / (m - q S)
  double q_lim_iterated = 0.0;  // last iterate of the recursion
  int iterations = 0;
  std::size_t bound_basic = 0;     // floor((1 - q) S)
  std::size_t bound_iterated = 0;  // floor((1 - q_lim) S)
};

/// Iterates q_{n+1} = q (m - (1 - q_n) S) / m from q_0 = q until successive
/// iterates differ by less than 1e-12 (at most 1000 steps), and derives the
/// lower bounds on the number of true discoveries.
FdrLevels iterate_qlim(double q, std::size_t m, std::size_t rejections);

/// Closed-form fixed point of the recursion above.
double qlim_closed_form(double q, std::size_t m, std::size_t rejections);

struct FdrOutcome {
  double q = 0.0;
  std::size_t m = 0;
  std::size_t k = 0;
  std::vector<bool> rejected;
  std::size_t rejections = 0;  // S_q
  double q_lim = 0.0;
  std::size_t bound_basic = 0;
  std::size_t bound_iterated = 0;
};

FdrOutcome control_fdr(std::span<const double> pvalues, double q);

}  // namespace gevtrend

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gevtrend/parallel.hpp"
#include "gevtrend/types.hpp"

namespace gevtrend {

inline constexpr int kMaxArmaOrder = 2;
inline constexpr int kDefaultLags = 20;
inline constexpr std::size_t kMinArmaLength = 50;

struct ArmaFit {
  int p = 0;
  int q = 0;
  double mean = 0.0;
  std::vector<double> ar;  // phi_1..phi_p
  std::vector<double> ma;  // theta_1..theta_q
  double sigma2 = 0.0;
  std::vector<double> residuals;
  double loglik = 0.0;
  double aic = 0.0;
  bool admissible = false;  // stationary AR part and invertible MA part
};

/// Conditional-sum-of-squares ARMA(p, q) fit to the mean-centred series with the
/// Gaussian working likelihood; AIC = 2 (p + q + 1) - 2 loglik.
/// Throws std::invalid_argument for series shorter than 50 or orders outside 0..2.
ArmaFit fit_arma(std::span<const double> series, int p, int q);

/// Minimum-AIC admissible fit over p, q in 0..2.
ArmaFit select_arma(std::span<const double> series);

struct Portmanteau {
  double statistic = 0.0;
  double pvalue = 1.0;
  int lags = 0;
  int dof = 0;
};

/// Box-Pierce Q = n sum_{k<=h} r_k^2 against chi-square with h - p - q degrees of freedom.
/// Throws std::invalid_argument unless h > p + q and the length exceeds 2h.
Portmanteau box_pierce(std::span<const double> residuals, int lags, int p = 0, int q = 0);

/// Observations of one variable within one (cell, month, year) block, in time order.
struct ValueBlock {
  CellId cell;
  int month = 0;
  int year = 0;
  std::vector<double> values;
};

struct BlockDiagnostic {
  CellId cell;
  int month = 0;
  int year = 0;
  int p = 0;
  int q = 0;
  double aic = 0.0;
  double box_pierce_q = 0.0;
  double bp_pvalue = 1.0;
  double raw_q = 0.0;  // Box-Pierce on the centred series, h degrees of freedom
  double raw_pvalue = 1.0;
};

struct ScreenSummary {
  std::vector<BlockDiagnostic> blocks;
  std::size_t cells = 0;
  std::size_t skipped_blocks = 0;       // shorter than the ARMA minimum
  double rejection_fraction = 0.0;      // residual tests with p < 0.05
  double raw_rejection_fraction = 0.0;  // raw-series tests with p < 0.05
};

BlockDiagnostic diagnose_block(const ValueBlock& block, int lags = kDefaultLags);

/// Diagnoses every block.
ScreenSummary screen_blocks(std::span<const ValueBlock> blocks, int lags = kDefaultLags,
                            Execution exec = Execution::Parallel, int workers = 0);

/// Samples sample_cells of the per-cell block lists uniformly without replacement
/// (seeded; capped at the number of cells) and screens their blocks.
ScreenSummary screen_blocks(std::span<const std::vector<ValueBlock>> per_cell, std::size_t sample_cells,
                            std::uint64_t seed, int lags = kDefaultLags, Execution exec = Execution::Parallel,
                            int workers = 0);

}  // namespace gevtrend

#pragma once

// Numerical tolerances shared by the library and its tests.

namespace tascov::tol {

// ||L L^T - M||_F <= kCholeskyReconstruction * p * max|M_ij|
inline constexpr double kCholeskyReconstruction = 1e-10;
// |sum(eigenvalues) - trace| <= kEigenTrace * p * max|M_ij|
inline constexpr double kEigenTrace = 1e-8;
// Row sums of a centred data matrix: |sum| <= kCentering * n * max|x|
inline constexpr double kCentering = 1e-8;
// sum of posterior probabilities == 1
inline constexpr double kPosteriorNormalisation = 1e-12;
// sum of target weights + sample weight == 1
inline constexpr double kWeightBudget = 1e-12;
// model-average route vs weight-form route, entrywise
inline constexpr double kRouteEquivalence = 1e-10;
// (alpha, Delta) <-> (nu, Psi), relative
inline constexpr double kReparametrisation = 1e-12;
// PRIAL recomputed from stored losses
inline constexpr double kPrialRecompute = 1e-10;
// a constant-correlation target is pulled inside the PD region by this margin
inline constexpr double kCorrelationMargin = 1e-6;
// zero diagonal entries of unequal-variance targets become mean_variance * this
inline constexpr double kZeroVarianceFloor = 1e-3;
// step d must satisfy |1/d - round(1/d)| <= this
inline constexpr double kGridStep = 1e-9;

}  // namespace tascov::tol

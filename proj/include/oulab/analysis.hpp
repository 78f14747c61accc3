#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "oulab/kernel_matrix.hpp"
#include "oulab/spectral.hpp"

namespace oulab {

/// Either a fixed threshold on the log-midpoint defect or the automatic
/// 10 h^2 kappa rule, where kappa is the median magnitude of the discrete
/// curvature of log f (at least 1).
struct Tolerance {
    bool automatic = true;
    double value = 0.0;

    static Tolerance fixed(double v) { return {false, v}; }
    static Tolerance auto_scaled() { return {true, 0.0}; }
};

struct LogConcavityOptions {
    /// Values at or below this are outside the test region.
    double floor = 1e-280;
    /// Long-range midpoint pairs on lattices of dimension >= 2.
    std::size_t pair_samples = 100000;
    std::uint64_t seed = 20240611;
};

struct WitnessPoint {
    std::vector<int> index;     // lattice multi-index
    std::vector<double> coord;  // physical coordinates
};

struct LogConcavityReport {
    bool pass = true;
    double worst_violation = -std::numeric_limits<double>::infinity();
    double tolerance = 0.0;
    /// "second-difference", "midpoint-pair", "positivity" or "none".
    std::string witness_kind = "none";
    std::vector<WitnessPoint> witness;
    double excluded_fraction = 0.0;
    std::size_t tests = 0;
};

/// Discrete log-concavity: every axis and diagonal second difference of log f
/// is at most tol, and on lattices of dimension >= 2 sampled midpoint pairs
/// satisfy f(p) f(q) <= f((p + q) / 2)^2 within tol.
/// Throws std::invalid_argument for negative values.
LogConcavityReport is_log_concave(const GridFunction& f, Tolerance tol,
                                  const LogConcavityOptions& opt = {});

/// Log-concavity of (x, z) -> K(x, z) e^{-|z|^2/2} on masked x masked points.
/// A non-positive masked entry fails the positivity pre-check.
LogConcavityReport is_jointly_log_concave(const KernelMatrix& k, Tolerance tol,
                                          const LogConcavityOptions& opt = {});

struct MarginalResult {
    GridFunction marginal;
    LogConcavityReport joint;
    LogConcavityReport marginal_check;
};

/// x -> sum_j f(x, y_j) weights_y[j] for f on a 2D grid (axis 0 is x). The
/// marginal is checked at ten times the tolerance used for the joint test.
MarginalResult prekopa_marginal(const GridFunction& f2d, std::span<const double> weights_y,
                                Tolerance tol, const LogConcavityOptions& opt = {});

/// Log-concavity of phi_{mode+1} on points at least two cells inside the
/// domain. Throws std::domain_error when the mode is not positive on the mask.
LogConcavityReport eigenfunction_logconcavity(const SpectralDecomposition& dec, Tolerance tol,
                                              int mode = 0, const LogConcavityOptions& opt = {});

using KernelProvider = std::function<KernelMatrix(double)>;

/// max over masked (i, j) of |e^{lambda_1 t} K(t)_ij - phi_1(x_i) phi_1(x_j)|.
double kernel_limit_defect(const KernelProvider& provider, const SpectralDecomposition& dec,
                           double t);

/// Pointwise product of two grid functions on one lattice.
GridFunction product(const GridFunction& a, const GridFunction& b);

}  // namespace oulab

#pragma once

#include <vector>

#include "oulab/geometry.hpp"
#include "oulab/kernel_matrix.hpp"

namespace oulab {

/// p_gamma(x_i, x_j; t) where both points are masked, 0 otherwise.
KernelMatrix masked_mehler(const Grid& grid, const DomainMask& mask, double t);

/// K[i][j] = sum_k K1[i][k] K2[k][j] w[k] mask[k]; time t1 + t2.
/// Squaring (k1 and k2 the same object) yields an exactly symmetric result.
KernelMatrix compose(const KernelMatrix& k1, const KernelMatrix& k2,
                     const QuadratureWeights& weights, const DomainMask& mask);

/// Largest L whose substep t / 2^L has kernel spread sqrt(1 - e^{-2 tau})
/// of at least two grid cells.
int max_admissible_levels(const Grid& grid, double t);

/// Throws std::invalid_argument when the substep kernel is narrower than 2h.
void check_substep(const Grid& grid, double t, int levels);

/// Dyadic Trotter approximation g_{2^L} of the Dirichlet kernel: the masked
/// Mehler kernel at t / 2^L squared L times with intermediate points confined
/// to the domain.
KernelMatrix trotter_kernel(const ConvexDomain& domain, const Grid& grid, double t, int levels);

struct ConvergenceReport {
    /// history[L - 1] = max |K_L - K_{L-1}| for L = 1..last level computed.
    std::vector<double> history;
    int level = 0;
    bool converged = false;
    double tol = 0.0;
};

struct DyadicResult {
    KernelMatrix kernel;
    ConvergenceReport report;
};

/// Increase L from 1 until the max-entry change drops below tol, up to l_max.
DyadicResult dyadic_converge(const ConvexDomain& domain, const Grid& grid, double t, int l_max,
                             double tol);

/// Row mass sum_j K[x][j] w[j].
double mass(const KernelMatrix& k, const QuadratureWeights& weights, std::size_t row);

}  // namespace oulab

#pragma once

#include <vector>

#include <Eigen/Dense>

#include "oulab/geometry.hpp"
#include "oulab/kernel_matrix.hpp"

namespace oulab {

/// Dirichlet Schroedinger form of the Ornstein-Uhlenbeck operator on the
/// masked lattice points: -Delta_h w + V w with V(x) = |x|^2 / 4 - dim / 2.
/// Unmasked neighbours are dropped (w = 0 there). Row q corresponds to grid
/// point `interior[q]`.
struct SchrodingerOperator {
    Grid grid;
    DomainMask mask;
    std::vector<std::size_t> interior;
    Eigen::MatrixXd matrix;

    /// Main and first off-diagonal when the matrix is tridiagonal (1D).
    bool tridiagonal = false;
    std::vector<double> main_diagonal;
    std::vector<double> off_diagonal;
};

double schrodinger_potential(const Point& x, int dim);

SchrodingerOperator assemble_operator(const ConvexDomain& domain, const Grid& grid);

/// Ascending eigenpairs with gamma-normalised eigenfunctions u = w e^{|x|^2/4}
/// stored as full-grid columns (zero off the mask). The first mode is positive
/// on the interior; every other mode has its largest-magnitude entry positive.
struct SpectralDecomposition {
    Grid grid;
    DomainMask mask;
    std::vector<double> eigenvalues;
    Eigen::MatrixXd modes;  // grid.size() x count

    int count() const { return static_cast<int>(eigenvalues.size()); }
    GridFunction mode(int k) const;
};

struct EigenPair {
    int index = 0;
    double eigenvalue = 0.0;
    GridFunction eigenfunction;
};

EigenPair eigen_pair(const SpectralDecomposition& dec, int k);

/// Smallest k_modes eigenpairs. Throws std::runtime_error if LAPACK fails.
SpectralDecomposition solve_eigs(const SchrodingerOperator& op, int k_modes);

/// Default mode count: 40 in 1D, 60 in 2D.
int default_modes(int dim);

/// sum_k e^{-lambda_k t} phi_k(x_i) phi_k(x_j); flagged truncated when
/// e^{-lambda_K t} >= 1e-12.
KernelMatrix spectral_kernel(const SpectralDecomposition& dec, double t);
double spectral_tail(const SpectralDecomposition& dec, double t);

/// sum_k e^{-t lambda_k} ||phi_k||^2 without forming the kernel.
double spectral_trace(const SpectralDecomposition& dec, double t);

/// r_k = ||phi_k||_inf / lambda_k^{dim/4}.
std::vector<double> sup_norm_ratio(const SpectralDecomposition& dec);

/// Least-squares slope of log r_k against log lambda_k over the first k modes.
double sup_norm_slope(const SpectralDecomposition& dec, int k);

/// S_N = sum_{k <= N} e^{-t lambda_k} for N = 1..k.
std::vector<double> trace_partial_sums(const SpectralDecomposition& dec, double t, int k);

/// M(t) = max_{k >= 2} exp(-lambda_k t + lambda_1 t + lambda_k) over the computed modes.
double convergence_rate(const SpectralDecomposition& dec, double t);

/// || Delta_h u - (x, grad_h u) + lambda u ||_inf over points two cells inside.
double eigen_residual(const GridFunction& u, double lambda, const DomainMask& m);
double residual_check(const SpectralDecomposition& dec, int k);

/// Discrete Gaussian Dirichlet form over the discrete Gaussian norm, evaluated
/// in the transformed variable w = v e^{-|x|^2/4} so that it is exactly the
/// quotient of the assembled operator.
double rayleigh_quotient(const SchrodingerOperator& op, const GridFunction& v);

/// Max |(phi_j, phi_k)_gamma - delta_jk|.
double gram_defect(const SpectralDecomposition& dec, const QuadratureWeights& w);

}  // namespace oulab

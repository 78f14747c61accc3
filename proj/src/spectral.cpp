#include "oulab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <lapacke.h>

namespace oulab {
namespace {

using Index = Eigen::Index;

constexpr double kTailBound = 1e-12;

// Back-transform w -> u = w e^{|x|^2/4}, normalise in L^2(gamma), fix the sign.
void finish_modes(SpectralDecomposition& dec, const SchrodingerOperator& op,
                  const Eigen::MatrixXd& w_vectors) {
    const QuadratureWeights qw = gaussian_weights(op.grid);
    const auto n = static_cast<Index>(op.grid.size());
    const auto k = w_vectors.cols();
    dec.modes = Eigen::MatrixXd::Zero(n, k);
    for (Index c = 0; c < k; ++c) {
        double norm2 = 0.0;
        for (std::size_t q = 0; q < op.interior.size(); ++q) {
            const std::size_t i = op.interior[q];
            const double u =
                w_vectors(static_cast<Index>(q), c) * std::exp(0.25 * squared_norm(op.grid.point(i)));
            dec.modes(static_cast<Index>(i), c) = u;
            norm2 += u * u * qw.weights[i];
        }
        dec.modes.col(c) /= std::sqrt(norm2);
        double sign = 1.0;
        if (c == 0) {
            sign = dec.modes.col(c).sum() < 0.0 ? -1.0 : 1.0;
        } else {
            Index arg = 0;
            dec.modes.col(c).cwiseAbs().maxCoeff(&arg);
            sign = dec.modes(arg, c) < 0.0 ? -1.0 : 1.0;
        }
        dec.modes.col(c) *= sign;
    }
}

Eigen::MatrixXd interior_block(const SpectralDecomposition& dec) {
    const auto idx = dec.mask.indices();
    const std::vector<Index> rows(idx.begin(), idx.end());
    return dec.modes(rows, Eigen::all);
}

}  // namespace

double schrodinger_potential(const Point& x, int dim) {
    return 0.25 * squared_norm(x) - 0.5 * dim;
}

SchrodingerOperator assemble_operator(const ConvexDomain& domain, const Grid& grid) {
    SchrodingerOperator op{grid, mask(domain, grid), {}, {}, false, {}, {}};
    op.interior = op.mask.indices();
    const auto m = static_cast<Index>(op.interior.size());
    std::vector<Index> position(grid.size(), -1);
    for (Index q = 0; q < m; ++q) position[op.interior[static_cast<std::size_t>(q)]] = q;

    // The dense matrix alone needs 8 m^2 bytes.
    constexpr Index kMaxDense = 16000;
    if (m > kMaxDense) {
        throw std::invalid_argument("assemble_operator: " + std::to_string(m) +
                                    " interior points exceed the dense limit of " +
                                    std::to_string(kMaxDense) + "; use a coarser grid");
    }
    op.matrix = Eigen::MatrixXd::Zero(m, m);
    for (Index q = 0; q < m; ++q) {
        const std::size_t i = op.interior[static_cast<std::size_t>(q)];
        const auto idx = grid.multi_index(i);
        double diag = schrodinger_potential(grid.point(i), grid.dim());
        for (int a = 0; a < grid.dim(); ++a) {
            const double inv_h2 = 1.0 / (grid.spacing(a) * grid.spacing(a));
            diag += 2.0 * inv_h2;
            for (int step : {-1, 1}) {
                auto j = idx;
                j[a] += step;
                if (j[a] < 0 || j[a] >= grid.count(a)) continue;
                const Index p = position[grid.flat_index(j[0], grid.dim() == 2 ? j[1] : 0)];
                if (p >= 0) op.matrix(q, p) = -inv_h2;
            }
        }
        op.matrix(q, q) = diag;
    }

    if (grid.dim() == 1) {
        op.tridiagonal = true;
        op.main_diagonal.resize(static_cast<std::size_t>(m));
        op.off_diagonal.assign(static_cast<std::size_t>(std::max<Index>(m - 1, 1)), 0.0);
        for (Index q = 0; q < m; ++q) {
            op.main_diagonal[static_cast<std::size_t>(q)] = op.matrix(q, q);
            if (q + 1 < m) op.off_diagonal[static_cast<std::size_t>(q)] = op.matrix(q, q + 1);
        }
    }
    return op;
}

GridFunction SpectralDecomposition::mode(int k) const {
    if (k < 0 || k >= count()) throw std::out_of_range("spectral: mode index out of range");
    const Eigen::VectorXd col = modes.col(k);
    return GridFunction(grid, std::vector<double>(col.data(), col.data() + col.size()), mask);
}

EigenPair eigen_pair(const SpectralDecomposition& dec, int k) {
    return {k + 1, dec.eigenvalues.at(static_cast<std::size_t>(k)), dec.mode(k)};
}

int default_modes(int dim) { return dim == 1 ? 40 : 60; }

SpectralDecomposition solve_eigs(const SchrodingerOperator& op, int k_modes) {
    const auto m = static_cast<lapack_int>(op.interior.size());
    if (m == 0) throw std::invalid_argument("solve_eigs: empty operator");
    if (k_modes < 1 || k_modes > m) {
        throw std::invalid_argument("solve_eigs: mode count must lie in [1, " +
                                    std::to_string(m) + "]");
    }
    const lapack_int k = k_modes;
    std::vector<double> evals(static_cast<std::size_t>(m));
    Eigen::MatrixXd vecs(m, k);
    std::vector<lapack_int> support(2 * static_cast<std::size_t>(m));
    lapack_int found = 0;
    lapack_int info = 0;
    if (op.tridiagonal) {
        std::vector<double> d = op.main_diagonal;
        std::vector<double> e = op.off_diagonal;
        e.resize(static_cast<std::size_t>(m), 0.0);
        info = LAPACKE_dstevr(LAPACK_COL_MAJOR, 'V', 'I', m, d.data(), e.data(), 0.0, 0.0, 1, k,
                              0.0, &found, evals.data(), vecs.data(), m, support.data());
    } else {
        Eigen::MatrixXd a = op.matrix;
        info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', m, a.data(), m, 0.0, 0.0, 1, k,
                              0.0, &found, evals.data(), vecs.data(), m, support.data());
    }
    if (info != 0 || found != k) {
        throw std::runtime_error("solve_eigs: eigensolver failed (info = " +
                                 std::to_string(info) + ")");
    }
    SpectralDecomposition dec{op.grid, op.mask, {evals.begin(), evals.begin() + k}, {}};
    finish_modes(dec, op, vecs);
    return dec;
}

double spectral_tail(const SpectralDecomposition& dec, double t) {
    return std::exp(-dec.eigenvalues.back() * t);
}

KernelMatrix spectral_kernel(const SpectralDecomposition& dec, double t) {
    if (!(t > 0.0)) throw std::invalid_argument("spectral_kernel: time must be positive");
    const auto n = static_cast<Index>(dec.grid.size());
    KernelMatrix out{dec.grid, t, Eigen::MatrixXd::Zero(n, n), Provenance::Spectral,
                     dec.count(), dec.mask, spectral_tail(dec, t) >= kTailBound};
    Eigen::VectorXd half(dec.count());
    for (int k = 0; k < dec.count(); ++k) {
        half(k) = std::exp(-0.5 * dec.eigenvalues[static_cast<std::size_t>(k)] * t);
    }
    const auto idx = dec.mask.indices();
    const std::vector<Index> rows(idx.begin(), idx.end());
    const Eigen::MatrixXd b = dec.modes(rows, Eigen::all) * half.asDiagonal();
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(b.rows(), b.rows());
    c.selfadjointView<Eigen::Lower>().rankUpdate(b);
    c.triangularView<Eigen::StrictlyUpper>() = c.transpose();
    out.values(rows, rows) = c;
    return out;
}

double spectral_trace(const SpectralDecomposition& dec, double t) {
    if (!(t > 0.0)) throw std::invalid_argument("spectral_trace: time must be positive");
    const QuadratureWeights qw = gaussian_weights(dec.grid);
    double z = 0.0;
    for (int k = 0; k < dec.count(); ++k) {
        double norm2 = 0.0;
        for (std::size_t i : dec.mask.indices()) {
            const double v = dec.modes(static_cast<Index>(i), k);
            norm2 += v * v * qw.weights[i];
        }
        z += std::exp(-t * dec.eigenvalues[static_cast<std::size_t>(k)]) * norm2;
    }
    return z;
}

std::vector<double> sup_norm_ratio(const SpectralDecomposition& dec) {
    std::vector<double> r(static_cast<std::size_t>(dec.count()));
    const double power = 0.25 * dec.grid.dim();
    for (int k = 0; k < dec.count(); ++k) {
        const double sup = dec.modes.col(k).cwiseAbs().maxCoeff();
        r[static_cast<std::size_t>(k)] = sup / std::pow(dec.eigenvalues[static_cast<std::size_t>(k)], power);
    }
    return r;
}

double sup_norm_slope(const SpectralDecomposition& dec, int k) {
    const auto r = sup_norm_ratio(dec);
    const int n = std::min(k, dec.count());
    if (n < 2) return 0.0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        const double x = std::log(dec.eigenvalues[static_cast<std::size_t>(i)]);
        const double y = std::log(r[static_cast<std::size_t>(i)]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::vector<double> trace_partial_sums(const SpectralDecomposition& dec, double t, int k) {
    if (!(t > 0.0)) throw std::invalid_argument("trace_partial_sums: time must be positive");
    const int n = std::min(k, dec.count());
    std::vector<double> s(static_cast<std::size_t>(std::max(n, 0)));
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        acc += std::exp(-t * dec.eigenvalues[static_cast<std::size_t>(i)]);
        s[static_cast<std::size_t>(i)] = acc;
    }
    return s;
}

double convergence_rate(const SpectralDecomposition& dec, double t) {
    if (!(t > 0.0)) throw std::invalid_argument("convergence_rate: time must be positive");
    if (dec.count() < 2) throw std::invalid_argument("convergence_rate: need at least two modes");
    const double l1 = dec.eigenvalues[0];
    double best = 0.0;
    for (int k = 1; k < dec.count(); ++k) {
        const double lk = dec.eigenvalues[static_cast<std::size_t>(k)];
        best = std::max(best, std::exp(-lk * t + l1 * t + lk));
    }
    return best;
}

double eigen_residual(const GridFunction& u, double lambda, const DomainMask& m) {
    const Grid& g = u.grid;
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!m[i]) continue;
        const auto idx = g.multi_index(i);
        bool deep = true;
        for (int a = 0; a < g.dim() && deep; ++a) {
            for (int step : {-2, -1, 1, 2}) {
                auto j = idx;
                j[a] += step;
                if (j[a] < 0 || j[a] >= g.count(a) ||
                    !m[g.flat_index(j[0], g.dim() == 2 ? j[1] : 0)]) {
                    deep = false;
                    break;
                }
            }
        }
        if (!deep) continue;
        const Point x = g.point(i);
        double r = lambda * u.values[i];
        for (int a = 0; a < g.dim(); ++a) {
            auto jp = idx, jm = idx;
            jp[a] += 1;
            jm[a] -= 1;
            const double up = u.values[g.flat_index(jp[0], g.dim() == 2 ? jp[1] : 0)];
            const double um = u.values[g.flat_index(jm[0], g.dim() == 2 ? jm[1] : 0)];
            const double h = g.spacing(a);
            r += (up - 2.0 * u.values[i] + um) / (h * h) - x[a] * (up - um) / (2.0 * h);
        }
        worst = std::max(worst, std::abs(r));
    }
    return worst;
}

double residual_check(const SpectralDecomposition& dec, int k) {
    return eigen_residual(dec.mode(k), dec.eigenvalues.at(static_cast<std::size_t>(k)), dec.mask);
}

double rayleigh_quotient(const SchrodingerOperator& op, const GridFunction& v) {
    const auto m = static_cast<Index>(op.interior.size());
    Eigen::VectorXd w(m);
    for (Index q = 0; q < m; ++q) {
        const std::size_t i = op.interior[static_cast<std::size_t>(q)];
        w(q) = v.values[i] * std::exp(-0.25 * squared_norm(op.grid.point(i)));
    }
    const double den = w.squaredNorm();
    if (den == 0.0) throw std::invalid_argument("rayleigh_quotient: zero function");
    return w.dot(op.matrix * w) / den;
}

double gram_defect(const SpectralDecomposition& dec, const QuadratureWeights& w) {
    const Eigen::MatrixXd phi = interior_block(dec);
    const auto idx = dec.mask.indices();
    Eigen::VectorXd wi(static_cast<Index>(idx.size()));
    for (std::size_t q = 0; q < idx.size(); ++q) wi(static_cast<Index>(q)) = w.weights[idx[q]];
    const Eigen::MatrixXd gram = phi.transpose() * wi.asDiagonal() * phi;
    return (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

}  // namespace oulab

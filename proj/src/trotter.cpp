#include "oulab/trotter.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "oulab/mehler.hpp"

namespace oulab {
namespace {

constexpr int kMaxLevels = 30;

using Index = Eigen::Index;

std::vector<Index> to_eigen(const std::vector<std::size_t>& idx) {
    return {idx.begin(), idx.end()};
}

// Rows of m that are not identically zero on the given columns.
std::vector<Index> live_rows(const Eigen::MatrixXd& m, const std::vector<Index>& cols) {
    std::vector<Index> rows;
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index c : cols) {
            if (m(i, c) != 0.0) {
                rows.push_back(i);
                break;
            }
        }
    }
    return rows;
}

double substep_spread(double t, int levels) {
    return std::sqrt(-std::expm1(-2.0 * std::ldexp(t, -levels)));
}

}  // namespace

KernelMatrix masked_mehler(const Grid& grid, const DomainMask& m, double t) {
    if (!m.grid.same_lattice(grid)) {
        throw std::invalid_argument("masked_mehler: mask lives on a different grid");
    }
    const auto idx = m.indices();
    if (idx.empty()) throw std::invalid_argument("masked_mehler: empty mask");
    const auto n = static_cast<Index>(grid.size());
    KernelMatrix k{grid, t, Eigen::MatrixXd::Zero(n, n), Provenance::Trotter, 0, m, false};
    for (std::size_t b = 0; b < idx.size(); ++b) {
        const Point z = grid.point(idx[b]);
        const auto j = static_cast<Index>(idx[b]);
        for (std::size_t a = 0; a <= b; ++a) {
            const auto i = static_cast<Index>(idx[a]);
            const double v = mehler_gauss({grid.dim(), grid.point(idx[a]), z, t});
            k.values(i, j) = v;
            k.values(j, i) = v;
        }
    }
    return k;
}

KernelMatrix compose(const KernelMatrix& k1, const KernelMatrix& k2,
                     const QuadratureWeights& weights, const DomainMask& m) {
    if (!k1.grid.same_lattice(k2.grid) || !k1.grid.same_lattice(weights.grid) ||
        !k1.grid.same_lattice(m.grid)) {
        throw std::invalid_argument("compose: kernels, weights and mask must share one grid");
    }
    const auto n = static_cast<Index>(k1.size());
    KernelMatrix out{k1.grid, k1.t + k2.t, Eigen::MatrixXd::Zero(n, n), k1.provenance,
                     k1.detail, k1.mask, k1.truncated || k2.truncated};

    const auto inner = to_eigen(m.indices());
    if (inner.empty()) return out;
    Eigen::VectorXd w(static_cast<Index>(inner.size()));
    for (std::size_t q = 0; q < inner.size(); ++q) {
        w(static_cast<Index>(q)) = weights.weights[static_cast<std::size_t>(inner[q])];
    }

    const bool squaring = &k1 == &k2 && symmetry_defect(k1) == 0.0;
    if (squaring) {
        const auto rows = live_rows(k1.values, inner);
        if (rows.empty()) return out;
        const Eigen::MatrixXd b = k1.values(rows, inner) * w.cwiseSqrt().asDiagonal();
        Eigen::MatrixXd c = Eigen::MatrixXd::Zero(b.rows(), b.rows());
        c.selfadjointView<Eigen::Lower>().rankUpdate(b);
        c.triangularView<Eigen::StrictlyUpper>() = c.transpose();
        out.values(rows, rows) = c;
        return out;
    }

    const auto rows = live_rows(k1.values, inner);
    const Eigen::MatrixXd k2t = k2.values.transpose();
    const auto cols = live_rows(k2t, inner);
    if (rows.empty() || cols.empty()) return out;
    out.values(rows, cols) =
        k1.values(rows, inner) * w.asDiagonal() * k2.values(inner, cols);
    return out;
}

int max_admissible_levels(const Grid& grid, double t) {
    const double need = 2.0 * grid.max_spacing();
    int levels = -1;
    while (levels < kMaxLevels && substep_spread(t, levels + 1) >= need) ++levels;
    return levels;
}

void check_substep(const Grid& grid, double t, int levels) {
    if (levels < 0 || levels > kMaxLevels) {
        throw std::invalid_argument("trotter: levels must lie in [0, 30]");
    }
    const double spread = substep_spread(t, levels);
    if (spread < 2.0 * grid.max_spacing()) {
        std::ostringstream msg;
        msg << "trotter: substep t/2^" << levels << " = " << std::ldexp(t, -levels)
            << " has kernel spread " << spread << " below two cells (h = " << grid.max_spacing()
            << "); minimum usable h is " << spread / 2.0;
        throw std::invalid_argument(msg.str());
    }
}

KernelMatrix trotter_kernel(const ConvexDomain& domain, const Grid& grid, double t, int levels) {
    if (!(t > 0.0)) throw std::invalid_argument("trotter: time must be positive");
    check_substep(grid, t, levels);
    const DomainMask m = mask(domain, grid);
    const QuadratureWeights w = gaussian_weights(grid);
    KernelMatrix k = masked_mehler(grid, m, std::ldexp(t, -levels));
    for (int level = 1; level <= levels; ++level) {
        k = compose(k, k, w, m);
        k.detail = level;
    }
    k.t = t;
    return k;
}

DyadicResult dyadic_converge(const ConvexDomain& domain, const Grid& grid, double t, int l_max,
                             double tol) {
    if (l_max < 1) throw std::invalid_argument("dyadic_converge: l_max must be at least 1");
    check_substep(grid, t, l_max);
    ConvergenceReport report;
    report.tol = tol;
    KernelMatrix previous = trotter_kernel(domain, grid, t, 0);
    for (int level = 1; level <= l_max; ++level) {
        KernelMatrix current = trotter_kernel(domain, grid, t, level);
        const double change = max_abs_difference(current, previous);
        report.history.push_back(change);
        report.level = level;
        if (change < tol) {
            report.converged = true;
            return {std::move(current), report};
        }
        previous = std::move(current);
    }
    return {std::move(previous), report};
}

double mass(const KernelMatrix& k, const QuadratureWeights& weights, std::size_t row) {
    if (row >= k.size()) throw std::out_of_range("mass: row index out of range");
    if (!k.grid.same_lattice(weights.grid)) {
        throw std::invalid_argument("mass: kernel and weights live on different grids");
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < k.size(); ++j) sum += k(row, j) * weights.weights[j];
    return sum;
}

}  // namespace oulab

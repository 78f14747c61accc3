#include "oulab/kernel_matrix.hpp"

#include <stdexcept>

#include "oulab/mehler.hpp"

namespace oulab {

std::string to_string(Provenance p) {
    switch (p) {
        case Provenance::Mehler: return "mehler";
        case Provenance::Trotter: return "trotter";
        case Provenance::Spectral: return "spectral";
    }
    return "unknown";
}

std::string KernelMatrix::label() const {
    switch (provenance) {
        case Provenance::Trotter: return "trotter(" + std::to_string(detail) + ")";
        case Provenance::Spectral: return "spectral(" + std::to_string(detail) + ")";
        default: return "mehler";
    }
}

double symmetry_defect(const KernelMatrix& k) {
    return (k.values - k.values.transpose()).cwiseAbs().maxCoeff();
}

double min_entry(const KernelMatrix& k) { return k.values.minCoeff(); }

double max_abs_difference(const KernelMatrix& a, const KernelMatrix& b) {
    if (!a.grid.same_lattice(b.grid)) {
        throw std::invalid_argument("kernel difference: matrices live on different grids");
    }
    return (a.values - b.values).cwiseAbs().maxCoeff();
}

KernelMatrix sampled_mehler(const Grid& grid, double t) {
    const auto n = static_cast<Eigen::Index>(grid.size());
    KernelMatrix k{grid, t, Eigen::MatrixXd(n, n), Provenance::Mehler, 0, std::nullopt, false};
    for (Eigen::Index j = 0; j < n; ++j) {
        const Point z = grid.point(static_cast<std::size_t>(j));
        for (Eigen::Index i = 0; i <= j; ++i) {
            const double v = mehler_gauss({grid.dim(), grid.point(static_cast<std::size_t>(i)), z, t});
            k.values(i, j) = v;
            k.values(j, i) = v;
        }
    }
    return k;
}

}  // namespace oulab

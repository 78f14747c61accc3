#pragma once

#include <optional>
#include <string>

#include <Eigen/Dense>

#include "oulab/grid.hpp"

namespace oulab {

enum class Provenance { Mehler, Trotter, Spectral };

std::string to_string(Provenance p);

/// Dense two-point kernel K(x_i, x_j; t) on a grid. Row index is x, column z.
///
/// `detail` carries the dyadic level for Trotter kernels and the mode count
/// for spectral ones. Rows and columns outside an attached mask are zero.
struct KernelMatrix {
    Grid grid;
    double t = 0.0;
    Eigen::MatrixXd values;
    Provenance provenance = Provenance::Mehler;
    int detail = 0;
    std::optional<DomainMask> mask;
    bool truncated = false;

    std::size_t size() const { return grid.size(); }
    double operator()(std::size_t i, std::size_t j) const {
        return values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    std::string label() const;
};

/// Largest |K_ij - K_ji|.
double symmetry_defect(const KernelMatrix& k);
/// Smallest entry.
double min_entry(const KernelMatrix& k);
/// Largest entry of |a - b| (same grid required).
double max_abs_difference(const KernelMatrix& a, const KernelMatrix& b);

/// Whole-space Mehler kernel p_gamma sampled on every pair of lattice points.
KernelMatrix sampled_mehler(const Grid& grid, double t);

}  // namespace oulab

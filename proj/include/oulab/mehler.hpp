#pragma once

#include "oulab/grid.hpp"

namespace oulab {

/// Arguments (x, z; t) of the whole-space Ornstein-Uhlenbeck kernels.
struct KernelQuery {
    int dim = 1;
    Point x{0.0, 0.0};
    Point z{0.0, 0.0};
    double t = 1.0;
};

/// Log of the Mehler kernel with respect to Lebesgue measure,
/// p(x, z; t) = (2 pi (1 - e^{-2t}))^{-n/2} exp(-|z - e^{-t} x|^2 / (2 (1 - e^{-2t}))).
double log_mehler_lebesgue(const KernelQuery& q);
double mehler_lebesgue(const KernelQuery& q);

/// Log of the Mehler kernel with respect to the Gaussian measure,
/// p_gamma(x, z; t) = (1 - e^{-2t})^{-n/2}
///                    exp(-(|x|^2 - 2 e^t (x, z) + |z|^2) / (2 (e^{2t} - 1))).
/// Symmetric in (x, z) bit for bit.
double log_mehler_gauss(const KernelQuery& q);
double mehler_gauss(const KernelQuery& q);

/// p - p_gamma * (2 pi)^{-n/2} e^{-|z|^2 / 2}; zero up to rounding.
double kernels_relation_residual(const KernelQuery& q);

/// Quadrature rule in the integration variable y of the change-of-variable
/// form of the whole-space flow. Defaults to [-8, 8]^dim.
struct WholeSpaceQuadrature {
    double half_width = 8.0;
    int points_per_axis_1d = 1601;
    int points_per_axis_2d = 161;
};

/// [P(t) u0](x) = int u0(e^{-t} x + sqrt(1 - e^{-2t}) y) dgamma(y), evaluated at
/// every point of u0's grid. u0 is interpolated piecewise (bi)linearly and
/// extended by its boundary value outside the grid. t = 0 returns u0.
GridFunction whole_space_evolve(const GridFunction& u0, double t,
                                const WholeSpaceQuadrature& quad = {});

/// Value of the piecewise (bi)linear interpolant of f, clamped to the grid box.
double interpolate_clamped(const GridFunction& f, const Point& p);

}  // namespace oulab

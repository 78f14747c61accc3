#include "oulab/mehler.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace oulab {
namespace {

void require_time(double t) {
    if (!(t > 0.0) || !std::isfinite(t)) {
        throw std::invalid_argument("mehler: time must be positive and finite");
    }
}

}  // namespace

double log_mehler_lebesgue(const KernelQuery& q) {
    require_time(q.t);
    const double var = -std::expm1(-2.0 * q.t);  // 1 - e^{-2t}
    const double decay = std::exp(-q.t);
    const Point d{q.z[0] - decay * q.x[0], q.z[1] - decay * q.x[1]};
    return -0.5 * q.dim * std::log(2.0 * std::numbers::pi * var) -
           squared_norm(d) / (2.0 * var);
}

double mehler_lebesgue(const KernelQuery& q) { return std::exp(log_mehler_lebesgue(q)); }

double log_mehler_gauss(const KernelQuery& q) {
    require_time(q.t);
    // (|x|^2 - 2 e^t (x,z) + |z|^2) / (e^{2t} - 1)
    //   = e^{-t} (|x - z|^2 + (e^{-t} - 1)(|x|^2 + |z|^2)) / (1 - e^{-2t}),
    // which stays finite for large t and avoids cancellation for small t.
    const double var = -std::expm1(-2.0 * q.t);
    const Point diff{q.x[0] - q.z[0], q.x[1] - q.z[1]};
    const double num =
        std::exp(-q.t) * (squared_norm(diff) + std::expm1(-q.t) * (squared_norm(q.x) + squared_norm(q.z)));
    return -0.5 * q.dim * std::log(var) - num / (2.0 * var);
}

double mehler_gauss(const KernelQuery& q) { return std::exp(log_mehler_gauss(q)); }

double kernels_relation_residual(const KernelQuery& q) {
    const double density_log =
        -0.5 * q.dim * std::log(2.0 * std::numbers::pi) - 0.5 * squared_norm(q.z);
    return mehler_lebesgue(q) - std::exp(log_mehler_gauss(q) + density_log);
}

double interpolate_clamped(const GridFunction& f, const Point& p) {
    const Grid& g = f.grid;
    std::array<int, 2> base{0, 0};
    std::array<double, 2> frac{0.0, 0.0};
    for (int a = 0; a < g.dim(); ++a) {
        const double c = std::clamp(p[a], g.lo(a), g.hi(a));
        double u = (c - g.lo(a)) / g.spacing(a);
        int k = static_cast<int>(std::floor(u));
        k = std::clamp(k, 0, g.count(a) - 2);
        base[a] = k;
        frac[a] = std::clamp(u - k, 0.0, 1.0);
    }
    if (g.dim() == 1) {
        const double v0 = f.values[g.flat_index(base[0])];
        const double v1 = f.values[g.flat_index(base[0] + 1)];
        return v0 + frac[0] * (v1 - v0);
    }
    const double v00 = f.values[g.flat_index(base[0], base[1])];
    const double v10 = f.values[g.flat_index(base[0] + 1, base[1])];
    const double v01 = f.values[g.flat_index(base[0], base[1] + 1)];
    const double v11 = f.values[g.flat_index(base[0] + 1, base[1] + 1)];
    const double lo = v00 + frac[0] * (v10 - v00);
    const double hi = v01 + frac[0] * (v11 - v01);
    return lo + frac[1] * (hi - lo);
}

GridFunction whole_space_evolve(const GridFunction& u0, double t,
                                const WholeSpaceQuadrature& quad) {
    if (!(t >= 0.0)) throw std::invalid_argument("whole_space_evolve: negative time");
    if (t == 0.0) return GridFunction(u0.grid, u0.values);

    const int dim = u0.grid.dim();
    const double w = quad.half_width;
    const Grid ygrid = dim == 1
                           ? Grid::line(-w, w, quad.points_per_axis_1d)
                           : Grid::plane({-w, -w}, {w, w},
                                         {quad.points_per_axis_2d, quad.points_per_axis_2d});
    const QuadratureWeights yw = gaussian_weights(ygrid);
    const double decay = std::exp(-t);
    const double spread = std::sqrt(-std::expm1(-2.0 * t));

    std::vector<double> out(u0.size());
    for (std::size_t i = 0; i < u0.size(); ++i) {
        const Point x = u0.grid.point(i);
        double sum = 0.0;
        for (std::size_t j = 0; j < ygrid.size(); ++j) {
            const Point y = ygrid.point(j);
            const Point arg{decay * x[0] + spread * y[0], decay * x[1] + spread * y[1]};
            sum += interpolate_clamped(u0, arg) * yw.weights[j];
        }
        out[i] = sum;
    }
    return GridFunction(u0.grid, std::move(out));
}

}  // namespace oulab

#include "oulab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace oulab {

Grid Grid::build(int dim, std::span<const double> lo, std::span<const double> hi,
                 std::span<const int> n_per_axis) {
    if (dim != 1 && dim != 2) {
        throw std::invalid_argument("grid: dim must be 1 or 2, got " + std::to_string(dim));
    }
    const auto d = static_cast<std::size_t>(dim);
    if (lo.size() < d || hi.size() < d || n_per_axis.size() < d) {
        throw std::invalid_argument("grid: bounds and counts must have one entry per axis");
    }
    Grid g;
    g.dim_ = dim;
    g.size_ = 1;
    for (int a = 0; a < dim; ++a) {
        if (!(std::isfinite(lo[a]) && std::isfinite(hi[a])) || !(lo[a] < hi[a])) {
            throw std::invalid_argument("grid: degenerate bounds on axis " + std::to_string(a));
        }
        if (n_per_axis[a] < 3) {
            throw std::invalid_argument("grid: need at least 3 points on axis " +
                                        std::to_string(a));
        }
        g.lo_[a] = lo[a];
        g.hi_[a] = hi[a];
        g.n_[a] = n_per_axis[a];
        g.h_[a] = (hi[a] - lo[a]) / (n_per_axis[a] - 1);
        g.size_ *= static_cast<std::size_t>(n_per_axis[a]);
    }
    return g;
}

Grid Grid::line(double lo, double hi, int n) {
    const double l[] = {lo};
    const double h[] = {hi};
    const int c[] = {n};
    return build(1, l, h, c);
}

Grid Grid::plane(Point lo, Point hi, std::array<int, 2> n) {
    return build(2, lo, hi, n);
}

double Grid::max_spacing() const {
    return dim_ == 1 ? h_[0] : std::max(h_[0], h_[1]);
}

double Grid::coord(int axis, int k) const {
    if (k == n_[axis] - 1) return hi_[axis];
    if (k == 0) return lo_[axis];
    return lo_[axis] + (hi_[axis] - lo_[axis]) * static_cast<double>(k) / (n_[axis] - 1);
}

Point Grid::point(std::size_t flat) const {
    const auto idx = multi_index(flat);
    Point p{coord(0, idx[0]), 0.0};
    if (dim_ == 2) p[1] = coord(1, idx[1]);
    return p;
}

std::array<int, 2> Grid::multi_index(std::size_t flat) const {
    const auto n0 = static_cast<std::size_t>(n_[0]);
    return {static_cast<int>(flat % n0), static_cast<int>(flat / n0)};
}

std::size_t Grid::flat_index(int i0, int i1) const {
    return static_cast<std::size_t>(i0) +
           static_cast<std::size_t>(n_[0]) * static_cast<std::size_t>(i1);
}

bool Grid::same_lattice(const Grid& other) const {
    if (dim_ != other.dim_) return false;
    for (int a = 0; a < dim_; ++a) {
        if (lo_[a] != other.lo_[a] || hi_[a] != other.hi_[a] || n_[a] != other.n_[a]) {
            return false;
        }
    }
    return true;
}

QuadratureWeights gaussian_weights(const Grid& grid) {
    const double norm = std::pow(2.0 * std::numbers::pi, -0.5 * grid.dim());
    QuadratureWeights q{grid, std::vector<double>(grid.size())};
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto idx = grid.multi_index(i);
        double cell = 1.0;
        for (int a = 0; a < grid.dim(); ++a) {
            double h = grid.spacing(a);
            if (idx[a] == 0 || idx[a] == grid.count(a) - 1) h *= 0.5;
            cell *= h;
        }
        q.weights[i] = cell * norm * std::exp(-0.5 * squared_norm(grid.point(i)));
    }
    return q;
}

std::size_t DomainMask::count() const {
    return static_cast<std::size_t>(std::count(inside.begin(), inside.end(), char{1}));
}

std::vector<std::size_t> DomainMask::indices() const {
    std::vector<std::size_t> out;
    out.reserve(inside.size());
    for (std::size_t i = 0; i < inside.size(); ++i) {
        if (inside[i]) out.push_back(i);
    }
    return out;
}

GridFunction::GridFunction(Grid g, std::vector<double> v, std::optional<DomainMask> m)
    : grid(std::move(g)), values(std::move(v)), mask(std::move(m)) {
    if (values.size() != grid.size()) {
        throw std::invalid_argument("grid function: value count does not match grid size");
    }
    for (double x : values) {
        if (!std::isfinite(x)) throw std::invalid_argument("grid function: non-finite value");
    }
    if (mask) {
        if (!mask->grid.same_lattice(grid)) {
            throw std::invalid_argument("grid function: mask lives on a different grid");
        }
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!(*mask)[i] && values[i] != 0.0) {
                throw std::invalid_argument("grid function: nonzero value outside its mask");
            }
        }
    }
}

double integrate(const GridFunction& f, const QuadratureWeights& w) {
    if (!f.grid.same_lattice(w.grid)) {
        throw std::invalid_argument("integrate: function and weights live on different grids");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) sum += f.values[i] * w.weights[i];
    return sum;
}

}  // namespace oulab

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace oulab {

/// A point in R^1 or R^2. In 1D the second coordinate is unused and kept at 0.
using Point = std::array<double, 2>;

inline double squared_norm(const Point& p) { return p[0] * p[0] + p[1] * p[1]; }

/// Uniform closed-interval lattice over an axis-aligned bounding box.
///
/// Points are stored with axis 0 varying fastest: flat = i0 + n0 * i1.
/// Endpoints are part of the lattice, so the spacing on each axis is
/// (hi - lo) / (n - 1).
class Grid {
public:
    /// Throws std::invalid_argument for dim outside {1, 2}, lo >= hi or n < 3.
    static Grid build(int dim, std::span<const double> lo, std::span<const double> hi,
                      std::span<const int> n_per_axis);

    static Grid line(double lo, double hi, int n);
    static Grid plane(Point lo, Point hi, std::array<int, 2> n);

    int dim() const { return dim_; }
    std::size_t size() const { return size_; }
    int count(int axis) const { return n_[axis]; }
    double lo(int axis) const { return lo_[axis]; }
    double hi(int axis) const { return hi_[axis]; }
    double spacing(int axis) const { return h_[axis]; }
    double max_spacing() const;

    /// Coordinate of lattice index k on an axis; endpoints are exact.
    double coord(int axis, int k) const;
    Point point(std::size_t flat) const;
    std::array<int, 2> multi_index(std::size_t flat) const;
    std::size_t flat_index(int i0, int i1 = 0) const;

    /// Same lattice geometry (dimension, bounds, counts).
    bool same_lattice(const Grid& other) const;

private:
    Grid() = default;

    int dim_ = 1;
    std::array<double, 2> lo_{0.0, 0.0};
    std::array<double, 2> hi_{0.0, 0.0};
    std::array<int, 2> n_{1, 1};
    std::array<double, 2> h_{0.0, 0.0};
    std::size_t size_ = 0;
};

/// Trapezoid cell weight times the standard Gaussian density at each point.
struct QuadratureWeights {
    Grid grid;
    std::vector<double> weights;

    double operator[](std::size_t i) const { return weights[i]; }
    std::size_t size() const { return weights.size(); }
};

QuadratureWeights gaussian_weights(const Grid& grid);

/// Boolean membership per grid point; see geometry.hpp for construction.
struct DomainMask {
    Grid grid;
    std::vector<char> inside;

    bool operator[](std::size_t i) const { return inside[i] != 0; }
    std::size_t count() const;
    std::vector<std::size_t> indices() const;
};

/// Samples of a scalar function on a grid, optionally restricted to a mask.
struct GridFunction {
    Grid grid;
    std::vector<double> values;
    std::optional<DomainMask> mask;

    GridFunction(Grid g, std::vector<double> v, std::optional<DomainMask> m = std::nullopt);

    double operator[](std::size_t i) const { return values[i]; }
    std::size_t size() const { return values.size(); }
};

/// Discrete integral against the Gaussian measure: sum_i values[i] * weights[i].
/// Throws std::invalid_argument when the grids differ.
double integrate(const GridFunction& f, const QuadratureWeights& w);

}  // namespace oulab

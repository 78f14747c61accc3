#pragma once

#include <string>
#include <variant>
#include <vector>

#include "oulab/grid.hpp"

namespace oulab {

struct Interval {
    double a = 0.0;
    double b = 0.0;
};

struct AxisBox {
    Point lo{0.0, 0.0};
    Point hi{0.0, 0.0};
};

/// Vertices in counterclockwise order.
struct ConvexPolygon {
    std::vector<Point> vertices;
};

/// Bounded open convex set. Construction does not validate; use
/// verify_convexity, or the operations below which throw on invalid input.
using ConvexDomain = std::variant<Interval, AxisBox, ConvexPolygon>;

int domain_dim(const ConvexDomain& domain);
std::string domain_kind(const ConvexDomain& domain);

/// Axis-aligned bounding box of the closure.
AxisBox bounding_box(const ConvexDomain& domain);

/// Strict interior membership; boundary points are outside.
bool contains(const ConvexDomain& domain, const Point& p);

/// True iff the variant's invariants hold (ordering, strict convexity, simple
/// counterclockwise boundary).
bool verify_convexity(const ConvexDomain& domain);

/// (1 - s) * omega0 + s * omega1. Intervals and boxes combine endpointwise;
/// polygons through all pairwise vertex combinations and a convex hull.
/// Throws std::invalid_argument for s outside [0, 1] or mixed variants.
ConvexDomain minkowski_interpolate(const ConvexDomain& omega0, const ConvexDomain& omega1,
                                   double s);

/// Counterclockwise strictly convex hull (collinear points dropped).
std::vector<Point> convex_hull(std::vector<Point> points);

/// Throws if the grid does not cover the closure or no lattice point is inside.
DomainMask mask(const ConvexDomain& domain, const Grid& grid);

/// Points whose whole (2*cells+1)^dim lattice neighbourhood is masked.
DomainMask interior_mask(const DomainMask& m, int cells);

/// Grid over the bounding box with `points_per_unit` lattice cells per unit
/// length (n - 1 = length * points_per_unit, rounded). Throws when a side
/// length times points_per_unit is not an integer within 1e-6.
Grid matched_grid(const ConvexDomain& domain, double points_per_unit);

}  // namespace oulab

#include "oulab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace oulab {
namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

double cross(const Point& o, const Point& a, const Point& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

bool polygon_is_convex(const std::vector<Point>& v) {
    const std::size_t n = v.size();
    if (n < 3) return false;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (v[i] == v[j]) return false;
        }
    }
    // Every turn must be a strict left turn, and the turns must add up to one
    // full revolution (rules out star-shaped windings).
    double turning = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Point& a = v[i];
        const Point& b = v[(i + 1) % n];
        const Point& c = v[(i + 2) % n];
        if (!(cross(a, b, c) > 0.0)) return false;
        const double e1x = b[0] - a[0], e1y = b[1] - a[1];
        const double e2x = c[0] - b[0], e2y = c[1] - b[1];
        turning += std::atan2(e1x * e2y - e1y * e2x, e1x * e2x + e1y * e2y);
    }
    return std::abs(turning - 2.0 * std::numbers::pi) < 1e-6;
}

void require_valid(const ConvexDomain& d, const char* what) {
    if (!verify_convexity(d)) {
        throw std::invalid_argument(std::string(what) + ": invalid " + domain_kind(d) +
                                    " domain");
    }
}

double lerp(double a, double b, double s) { return (1.0 - s) * a + s * b; }

}  // namespace

int domain_dim(const ConvexDomain& domain) {
    return std::holds_alternative<Interval>(domain) ? 1 : 2;
}

std::string domain_kind(const ConvexDomain& domain) {
    return std::visit(overloaded{[](const Interval&) { return std::string("interval"); },
                                 [](const AxisBox&) { return std::string("box"); },
                                 [](const ConvexPolygon&) { return std::string("polygon"); }},
                      domain);
}

AxisBox bounding_box(const ConvexDomain& domain) {
    return std::visit(
        overloaded{[](const Interval& i) { return AxisBox{{i.a, 0.0}, {i.b, 0.0}}; },
                   [](const AxisBox& b) { return b; },
                   [](const ConvexPolygon& p) {
                       AxisBox box{p.vertices.at(0), p.vertices.at(0)};
                       for (const auto& v : p.vertices) {
                           for (int a = 0; a < 2; ++a) {
                               box.lo[a] = std::min(box.lo[a], v[a]);
                               box.hi[a] = std::max(box.hi[a], v[a]);
                           }
                       }
                       return box;
                   }},
        domain);
}

bool contains(const ConvexDomain& domain, const Point& p) {
    return std::visit(overloaded{[&](const Interval& i) { return i.a < p[0] && p[0] < i.b; },
                                 [&](const AxisBox& b) {
                                     return b.lo[0] < p[0] && p[0] < b.hi[0] &&
                                            b.lo[1] < p[1] && p[1] < b.hi[1];
                                 },
                                 [&](const ConvexPolygon& poly) {
                                     const auto& v = poly.vertices;
                                     for (std::size_t k = 0; k < v.size(); ++k) {
                                         if (!(cross(v[k], v[(k + 1) % v.size()], p) > 0.0)) {
                                             return false;
                                         }
                                     }
                                     return true;
                                 }},
                      domain);
}

bool verify_convexity(const ConvexDomain& domain) {
    return std::visit(
        overloaded{[](const Interval& i) {
                       return std::isfinite(i.a) && std::isfinite(i.b) && i.a < i.b;
                   },
                   [](const AxisBox& b) {
                       return std::isfinite(b.lo[0]) && std::isfinite(b.hi[0]) &&
                              std::isfinite(b.lo[1]) && std::isfinite(b.hi[1]) &&
                              b.lo[0] < b.hi[0] && b.lo[1] < b.hi[1];
                   },
                   [](const ConvexPolygon& p) { return polygon_is_convex(p.vertices); }},
        domain);
}

namespace {

// Left turn by more than rounding; near-collinear points are dropped.
bool strict_left(const Point& a, const Point& b, const Point& p) {
    const double scale = std::hypot(b[0] - a[0], b[1] - a[1]) * std::hypot(p[0] - a[0], p[1] - a[1]);
    return cross(a, b, p) > 1e-12 * scale;
}

}  // namespace

std::vector<Point> convex_hull(std::vector<Point> pts) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) return pts;
    std::vector<Point> hull(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && !strict_left(hull[k - 2], hull[k - 1], p)) --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
        while (k >= lower && !strict_left(hull[k - 2], hull[k - 1], pts[i])) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

ConvexDomain minkowski_interpolate(const ConvexDomain& omega0, const ConvexDomain& omega1,
                                   double s) {
    if (!(s >= 0.0 && s <= 1.0)) {
        throw std::invalid_argument("minkowski_interpolate: s must lie in [0, 1]");
    }
    if (omega0.index() != omega1.index()) {
        throw std::invalid_argument("minkowski_interpolate: cannot combine " +
                                    domain_kind(omega0) + " with " + domain_kind(omega1));
    }
    require_valid(omega0, "minkowski_interpolate");
    require_valid(omega1, "minkowski_interpolate");
    if (s == 0.0) return omega0;
    if (s == 1.0) return omega1;

    if (const auto* i0 = std::get_if<Interval>(&omega0)) {
        const auto& i1 = std::get<Interval>(omega1);
        return Interval{lerp(i0->a, i1.a, s), lerp(i0->b, i1.b, s)};
    }
    if (const auto* b0 = std::get_if<AxisBox>(&omega0)) {
        const auto& b1 = std::get<AxisBox>(omega1);
        return AxisBox{{lerp(b0->lo[0], b1.lo[0], s), lerp(b0->lo[1], b1.lo[1], s)},
                       {lerp(b0->hi[0], b1.hi[0], s), lerp(b0->hi[1], b1.hi[1], s)}};
    }
    const auto& p0 = std::get<ConvexPolygon>(omega0).vertices;
    const auto& p1 = std::get<ConvexPolygon>(omega1).vertices;
    std::vector<Point> sums;
    sums.reserve(p0.size() * p1.size());
    for (const auto& a : p0) {
        for (const auto& b : p1) {
            sums.push_back({lerp(a[0], b[0], s), lerp(a[1], b[1], s)});
        }
    }
    return ConvexPolygon{convex_hull(std::move(sums))};
}

DomainMask mask(const ConvexDomain& domain, const Grid& grid) {
    if (!verify_convexity(domain)) {
        throw std::invalid_argument("mask: unsupported or invalid " + domain_kind(domain) +
                                    " domain");
    }
    if (domain_dim(domain) != grid.dim()) {
        throw std::invalid_argument("mask: domain and grid dimensions differ");
    }
    const AxisBox box = bounding_box(domain);
    constexpr double slack = 1e-12;
    for (int a = 0; a < grid.dim(); ++a) {
        if (box.lo[a] < grid.lo(a) - slack || box.hi[a] > grid.hi(a) + slack) {
            throw std::invalid_argument("mask: grid does not cover the domain closure");
        }
    }
    DomainMask m{grid, std::vector<char>(grid.size(), 0)};
    bool any = false;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (contains(domain, grid.point(i))) {
            m.inside[i] = 1;
            any = true;
        }
    }
    if (!any) throw std::invalid_argument("mask: no lattice point lies inside the domain");
    return m;
}

DomainMask interior_mask(const DomainMask& m, int cells) {
    const Grid& g = m.grid;
    DomainMask out{g, std::vector<char>(g.size(), 0)};
    const int r1 = g.dim() == 2 ? cells : 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!m[i]) continue;
        const auto idx = g.multi_index(i);
        bool ok = true;
        for (int d1 = -r1; d1 <= r1 && ok; ++d1) {
            for (int d0 = -cells; d0 <= cells && ok; ++d0) {
                const int j0 = idx[0] + d0, j1 = idx[1] + d1;
                if (j0 < 0 || j0 >= g.count(0) || (g.dim() == 2 && (j1 < 0 || j1 >= g.count(1)))) {
                    ok = false;
                } else if (!m[g.flat_index(j0, g.dim() == 2 ? j1 : 0)]) {
                    ok = false;
                }
            }
        }
        out.inside[i] = ok ? 1 : 0;
    }
    return out;
}

Grid matched_grid(const ConvexDomain& domain, double points_per_unit) {
    if (!(points_per_unit > 0.0)) {
        throw std::invalid_argument("matched_grid: points_per_unit must be positive");
    }
    require_valid(domain, "matched_grid");
    const AxisBox box = bounding_box(domain);
    const int dim = domain_dim(domain);
    std::array<int, 2> n{};
    for (int a = 0; a < dim; ++a) {
        const double cells = (box.hi[a] - box.lo[a]) * points_per_unit;
        const double rounded = std::round(cells);
        if (std::abs(cells - rounded) > 1e-6) {
            throw std::invalid_argument(
                "matched_grid: resolution mismatch, side length times points_per_unit is "
                "not an integer");
        }
        n[a] = static_cast<int>(rounded) + 1;
    }
    if (dim == 1) return Grid::line(box.lo[0], box.hi[0], n[0]);
    return Grid::plane(box.lo, box.hi, n);
}

}  // namespace oulab

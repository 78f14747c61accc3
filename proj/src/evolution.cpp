#include "oulab/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "oulab/trotter.hpp"

namespace oulab {
namespace {

using Index = Eigen::Index;

void require_supported(const GridFunction& u0, const DomainMask& m) {
    if (!u0.grid.same_lattice(m.grid)) {
        throw std::invalid_argument("evolve: initial datum lives on a different grid");
    }
    for (std::size_t i = 0; i < u0.size(); ++i) {
        if (!m[i] && u0.values[i] != 0.0) {
            throw std::invalid_argument("evolve: initial datum is nonzero outside the domain");
        }
    }
}

void require_times(const std::vector<double>& times) {
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(times[i] > 0.0) || (i > 0 && !(times[i] > times[i - 1]))) {
            throw std::invalid_argument("evolve: times must be positive and ascending");
        }
    }
}

struct Shape {
    Point center{0.0, 0.0};
    double inradius = 0.0;  // distance from center to the boundary
};

Shape domain_shape(const ConvexDomain& domain) {
    Shape s;
    if (const auto* poly = std::get_if<ConvexPolygon>(&domain)) {
        const auto& v = poly->vertices;
        for (const auto& p : v) {
            s.center[0] += p[0] / static_cast<double>(v.size());
            s.center[1] += p[1] / static_cast<double>(v.size());
        }
        s.inradius = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < v.size(); ++k) {
            const Point& a = v[k];
            const Point& b = v[(k + 1) % v.size()];
            const double len = std::hypot(b[0] - a[0], b[1] - a[1]);
            const double d = ((b[0] - a[0]) * (s.center[1] - a[1]) -
                              (b[1] - a[1]) * (s.center[0] - a[0])) / len;
            s.inradius = std::min(s.inradius, d);
        }
        return s;
    }
    const AxisBox box = bounding_box(domain);
    const int dim = domain_dim(domain);
    s.inradius = std::numeric_limits<double>::infinity();
    for (int a = 0; a < dim; ++a) {
        s.center[a] = 0.5 * (box.lo[a] + box.hi[a]);
        s.inradius = std::min(s.inradius, 0.5 * (box.hi[a] - box.lo[a]));
    }
    return s;
}

template <class F>
GridFunction sample_on_mask(const Grid& grid, const DomainMask& m, F&& f) {
    std::vector<double> v(grid.size(), 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (m[i]) v[i] = f(grid.point(i));
    }
    return GridFunction(grid, std::move(v), m);
}

double gaussian_bump(const Point& x, const Point& c, double sigma) {
    const Point d{x[0] - c[0], x[1] - c[1]};
    return std::exp(-squared_norm(d) / (2.0 * sigma * sigma));
}

GridFunction apply_kernel(const KernelMatrix& k, const GridFunction& u0,
                          const QuadratureWeights& w, const DomainMask& m) {
    Eigen::VectorXd f(static_cast<Index>(u0.size()));
    for (std::size_t j = 0; j < u0.size(); ++j) f(static_cast<Index>(j)) = u0.values[j] * w.weights[j];
    const Eigen::VectorXd u = k.values * f;
    std::vector<double> out(u0.size(), 0.0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (m[i]) out[i] = u(static_cast<Index>(i));
    }
    return GridFunction(u0.grid, std::move(out), m);
}

}  // namespace

EvolutionResult evolve_spectral(const ConvexDomain& domain, const SpectralDecomposition& dec,
                                const GridFunction& u0, const std::vector<double>& times) {
    require_supported(u0, dec.mask);
    require_times(times);
    const QuadratureWeights w = gaussian_weights(dec.grid);
    const auto idx = dec.mask.indices();

    // Coefficients (phi_k, u0)_gamma.
    Eigen::VectorXd coeff = Eigen::VectorXd::Zero(dec.count());
    for (std::size_t i : idx) {
        coeff += dec.modes.row(static_cast<Index>(i)).transpose() * (u0.values[i] * w.weights[i]);
    }
    EvolutionResult res{domain, u0, times, {}, Provenance::Spectral,
                        times.empty() ? 0.0 : spectral_tail(dec, times.front())};
    for (double t : times) {
        Eigen::VectorXd c = coeff;
        for (int k = 0; k < dec.count(); ++k) c(k) *= std::exp(-dec.eigenvalues[static_cast<std::size_t>(k)] * t);
        std::vector<double> out(dec.grid.size(), 0.0);
        for (std::size_t i : idx) out[i] = dec.modes.row(static_cast<Index>(i)).dot(c);
        res.states.emplace_back(dec.grid, std::move(out), dec.mask);
    }
    return res;
}

EvolutionResult evolve_dirichlet(const ConvexDomain& domain, const Grid& grid,
                                 const GridFunction& u0, const std::vector<double>& times,
                                 const EvolutionOptions& opt) {
    const DomainMask m = mask(domain, grid);
    require_supported(u0, m);
    require_times(times);
    if (opt.method == Method::Spectral) {
        const SchrodingerOperator op = assemble_operator(domain, grid);
        const int all = static_cast<int>(op.interior.size());
        int k = opt.modes > 0 ? opt.modes : (grid.dim() == 1 ? all : default_modes(2));
        k = std::min(k, all);
        return evolve_spectral(domain, solve_eigs(op, k), u0, times);
    }
    const QuadratureWeights w = gaussian_weights(grid);
    EvolutionResult res{domain, u0, times, {}, Provenance::Trotter, 0.0};
    for (double t : times) {
        const int levels = opt.trotter_levels >= 0 ? opt.trotter_levels : max_admissible_levels(grid, t);
        res.states.push_back(apply_kernel(trotter_kernel(domain, grid, t, levels), u0, w, m));
    }
    return res;
}

std::vector<NamedDatum> builtin_family(const ConvexDomain& domain, const Grid& grid) {
    std::vector<NamedDatum> out;
    for (const char* name : {"gaussian_narrow", "gaussian_wide", "gaussian_offset", "cone",
                             "indicator_smoothed", "constant"}) {
        out.push_back({name, builtin_datum(name, domain, grid)});
    }
    return out;
}

GridFunction builtin_datum(const std::string& name, const ConvexDomain& domain, const Grid& grid) {
    const DomainMask m = mask(domain, grid);
    const Shape s = domain_shape(domain);
    const double a = s.inradius;
    const Point c = s.center;
    const int dim = grid.dim();
    if (name == "gaussian_narrow") {
        return sample_on_mask(grid, m, [&](const Point& x) { return gaussian_bump(x, c, 0.25 * a); });
    }
    if (name == "gaussian_wide") {
        return sample_on_mask(grid, m, [&](const Point& x) { return gaussian_bump(x, c, a); });
    }
    if (name == "gaussian_offset") {
        const Point off{c[0] + 0.3 * a, dim == 2 ? c[1] + 0.3 * a : 0.0};
        return sample_on_mask(grid, m, [&](const Point& x) { return gaussian_bump(x, off, 0.4 * a); });
    }
    if (name == "cone") {
        return sample_on_mask(grid, m, [&](const Point& x) {
            const double r = std::hypot(x[0] - c[0], x[1] - c[1]);
            return std::max(0.0, 1.0 - r / (0.8 * a));
        });
    }
    if (name == "indicator_smoothed") {
        // Indicator of the inner box |x - c|_inf < a/2 with a linear ramp one cell wide.
        const double h = grid.max_spacing();
        return sample_on_mask(grid, m, [&](const Point& x) {
            const double d = std::max(std::abs(x[0] - c[0]), std::abs(x[1] - c[1]));
            return std::clamp((0.5 * a - d) / h + 0.5, 0.0, 1.0);
        });
    }
    if (name == "constant") {
        return sample_on_mask(grid, m, [](const Point&) { return 1.0; });
    }
    if (name == "bimodal") {
        const Point left{c[0] - 0.6 * a, c[1]};
        const Point right{c[0] + 0.6 * a, c[1]};
        return sample_on_mask(grid, m, [&](const Point& x) {
            return gaussian_bump(x, left, 0.1 * a) + gaussian_bump(x, right, 0.1 * a);
        });
    }
    throw std::invalid_argument("unknown built-in datum '" + name + "'");
}

bool PreservationReport::all_pass() const { return failures() == 0; }

std::size_t PreservationReport::failures() const {
    std::size_t n = 0;
    for (const auto& e : entries) {
        for (const auto& r : e.reports) n += r.pass ? 0 : 1;
    }
    return n;
}

std::size_t PreservationReport::checks() const {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.reports.size();
    return n;
}

PreservationReport preservation_suite(const ConvexDomain& domain, const Grid& grid,
                                      const std::vector<NamedDatum>& family,
                                      const std::vector<double>& times, Tolerance tol,
                                      const EvolutionOptions& opt) {
    PreservationReport rep;
    std::optional<SpectralDecomposition> dec;
    if (opt.method == Method::Spectral) {
        const SchrodingerOperator op = assemble_operator(domain, grid);
        const int all = static_cast<int>(op.interior.size());
        int k = opt.modes > 0 ? opt.modes : (grid.dim() == 1 ? all : default_modes(2));
        dec = solve_eigs(op, std::min(k, all));
    }
    for (const auto& datum : family) {
        PreservationEntry entry;
        entry.name = datum.name;
        entry.precondition = is_log_concave(datum.values, tol);
        if (!entry.precondition.pass) {
            entry.skipped = true;
            rep.entries.push_back(std::move(entry));
            continue;
        }
        const EvolutionResult res = dec ? evolve_spectral(domain, *dec, datum.values, times)
                                        : evolve_dirichlet(domain, grid, datum.values, times, opt);
        entry.times = times;
        for (const auto& u : res.states) entry.reports.push_back(is_log_concave(u, tol));
        rep.entries.push_back(std::move(entry));
    }
    return rep;
}

double short_time_identity(const ConvexDomain& domain, const Grid& grid, const GridFunction& u0,
                           double t_small, const EvolutionOptions& opt) {
    if (!(t_small >= 0.0)) throw std::invalid_argument("short_time_identity: negative time");
    const DomainMask m = mask(domain, grid);
    require_supported(u0, m);
    const DomainMask inner = interior_mask(m, 4);
    std::vector<std::size_t> support;
    for (std::size_t i = 0; i < u0.size(); ++i) {
        if (inner[i] && u0.values[i] != 0.0) support.push_back(i);
    }
    if (support.empty()) {
        throw std::invalid_argument("short_time_identity: support lies within four cells of the boundary");
    }
    if (t_small == 0.0) return 0.0;
    const EvolutionResult res = evolve_dirichlet(domain, grid, u0, {t_small}, opt);
    double worst = 0.0;
    for (std::size_t i : support) {
        worst = std::max(worst, std::abs(res.states.front().values[i] - u0.values[i]));
    }
    return worst;
}

double gaussian_l2_norm(const GridFunction& u, const QuadratureWeights& w) {
    if (!u.grid.same_lattice(w.grid)) {
        throw std::invalid_argument("gaussian_l2_norm: function and weights live on different grids");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u.values[i] * u.values[i] * w.weights[i];
    return std::sqrt(s);
}

}  // namespace oulab

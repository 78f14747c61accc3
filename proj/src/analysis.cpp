#include "oulab/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <stdexcept>

namespace oulab {
namespace {

constexpr int kMaxDims = 4;
constexpr double kNegativeSlack = 1e-12;

// Log-values on a regular lattice of up to four dimensions, natural strides
// (axis 0 fastest). `active` marks the test region.
struct Lattice {
    int dims = 1;
    std::array<int, kMaxDims> shape{1, 1, 1, 1};
    std::array<double, kMaxDims> lo{0, 0, 0, 0};
    std::array<double, kMaxDims> spacing{1, 1, 1, 1};
    std::array<std::size_t, kMaxDims> stride{1, 1, 1, 1};
    std::vector<double> logv;
    std::vector<char> active;
    std::size_t excluded = 0;
    std::size_t candidates = 0;

    void finish_strides() {
        stride[0] = 1;
        for (int a = 1; a < dims; ++a) stride[a] = stride[a - 1] * static_cast<std::size_t>(shape[a - 1]);
    }
    std::size_t size() const { return stride[dims - 1] * static_cast<std::size_t>(shape[dims - 1]); }
    std::array<int, kMaxDims> unflatten(std::size_t flat) const {
        std::array<int, kMaxDims> idx{0, 0, 0, 0};
        for (int a = 0; a < dims; ++a) {
            idx[a] = static_cast<int>(flat % static_cast<std::size_t>(shape[a]));
            flat /= static_cast<std::size_t>(shape[a]);
        }
        return idx;
    }
    std::size_t flatten(const std::array<int, kMaxDims>& idx) const {
        std::size_t f = 0;
        for (int a = 0; a < dims; ++a) f += stride[a] * static_cast<std::size_t>(idx[a]);
        return f;
    }
    WitnessPoint witness(std::size_t flat) const {
        const auto idx = unflatten(flat);
        WitnessPoint w;
        for (int a = 0; a < dims; ++a) {
            w.index.push_back(idx[a]);
            w.coord.push_back(lo[a] + spacing[a] * idx[a]);
        }
        return w;
    }
};

struct Direction {
    std::array<int, kMaxDims> step{0, 0, 0, 0};
};

std::vector<Direction> directions(int dims) {
    std::vector<Direction> out;
    for (int a = 0; a < dims; ++a) {
        Direction d;
        d.step[a] = 1;
        out.push_back(d);
    }
    for (int a = 0; a < dims; ++a) {
        for (int b = a + 1; b < dims; ++b) {
            for (int sign : {1, -1}) {
                Direction d;
                d.step[a] = 1;
                d.step[b] = sign;
                out.push_back(d);
            }
        }
    }
    return out;
}

// Neighbour index of `flat` shifted by k * step, or npos if off the lattice.
constexpr std::size_t npos = static_cast<std::size_t>(-1);
std::size_t shifted(const Lattice& lat, const std::array<int, kMaxDims>& idx,
                    const Direction& d, int k) {
    std::array<int, kMaxDims> j = idx;
    for (int a = 0; a < lat.dims; ++a) {
        j[a] += k * d.step[a];
        if (j[a] < 0 || j[a] >= lat.shape[a]) return npos;
    }
    return lat.flatten(j);
}

double median_abs(std::vector<double>& v) {
    if (v.empty()) return 0.0;
    auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

double resolve_tolerance(const Lattice& lat, Tolerance tol) {
    if (!tol.automatic) return tol.value;
    double kappa = 1.0;
    double hmax = 0.0;
    for (int a = 0; a < lat.dims; ++a) {
        hmax = std::max(hmax, lat.spacing[a]);
        Direction d;
        d.step[a] = 1;
        std::vector<double> curv;
        for (std::size_t p = 0; p < lat.size(); ++p) {
            if (!lat.active[p]) continue;
            const auto idx = lat.unflatten(p);
            const std::size_t m = shifted(lat, idx, d, -1), q = shifted(lat, idx, d, 1);
            if (m == npos || q == npos || !lat.active[m] || !lat.active[q]) continue;
            curv.push_back(std::abs(lat.logv[m] - 2.0 * lat.logv[p] + lat.logv[q]) /
                           (lat.spacing[a] * lat.spacing[a]));
        }
        kappa = std::max(kappa, median_abs(curv));
    }
    return 10.0 * hmax * hmax * kappa;
}

void record(LogConcavityReport& rep, double v, const char* kind,
            std::initializer_list<std::size_t> pts, const Lattice& lat) {
    if (v > rep.worst_violation) {
        rep.worst_violation = v;
        rep.witness_kind = kind;
        rep.witness.clear();
        for (std::size_t p : pts) rep.witness.push_back(lat.witness(p));
    }
}

LogConcavityReport check_lattice(const Lattice& lat, Tolerance tol,
                                 const LogConcavityOptions& opt) {
    LogConcavityReport rep;
    rep.tolerance = resolve_tolerance(lat, tol);
    rep.excluded_fraction =
        lat.candidates == 0 ? 0.0 : static_cast<double>(lat.excluded) / lat.candidates;

    const auto dirs = directions(lat.dims);
    for (std::size_t p = 0; p < lat.size(); ++p) {
        if (!lat.active[p]) continue;
        const auto idx = lat.unflatten(p);
        for (const auto& d : dirs) {
            const std::size_t m = shifted(lat, idx, d, -1), q = shifted(lat, idx, d, 1);
            if (m == npos || q == npos || !lat.active[m] || !lat.active[q]) continue;
            ++rep.tests;
            record(rep, lat.logv[m] - 2.0 * lat.logv[p] + lat.logv[q], "second-difference",
                   {m, p, q}, lat);
        }
    }

    if (lat.dims >= 2 && opt.pair_samples > 0) {
        std::vector<std::size_t> region;
        for (std::size_t p = 0; p < lat.size(); ++p) {
            if (lat.active[p]) region.push_back(p);
        }
        if (region.size() >= 2) {
            std::mt19937_64 rng(opt.seed);
            std::uniform_int_distribution<std::size_t> pick(0, region.size() - 1);
            const std::size_t max_attempts = 10 * opt.pair_samples;
            std::size_t done = 0;
            for (std::size_t attempt = 0; attempt < max_attempts && done < opt.pair_samples;
                 ++attempt) {
                const std::size_t p = region[pick(rng)];
                const auto ip = lat.unflatten(p);
                auto iq = lat.unflatten(region[pick(rng)]);
                for (int a = 0; a < lat.dims; ++a) {
                    if ((iq[a] - ip[a]) % 2 != 0) iq[a] += iq[a] < ip[a] ? 1 : -1;
                }
                const std::size_t q = lat.flatten(iq);
                if (q == p || !lat.active[q]) continue;
                std::array<int, kMaxDims> im{0, 0, 0, 0};
                for (int a = 0; a < lat.dims; ++a) im[a] = (ip[a] + iq[a]) / 2;
                const std::size_t m = lat.flatten(im);
                ++done;
                ++rep.tests;
                const double mid = lat.active[m] ? lat.logv[m]
                                                 : -std::numeric_limits<double>::infinity();
                record(rep, lat.logv[p] + lat.logv[q] - 2.0 * mid, "midpoint-pair", {p, q, m},
                       lat);
            }
        }
    }
    rep.pass = rep.tests == 0 || rep.worst_violation <= rep.tolerance;
    return rep;
}

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

Lattice lattice_from_function(const GridFunction& f, const LogConcavityOptions& opt) {
    const double scale = max_abs(f.values);
    Lattice lat;
    lat.dims = f.grid.dim();
    for (int a = 0; a < lat.dims; ++a) {
        lat.shape[a] = f.grid.count(a);
        lat.lo[a] = f.grid.lo(a);
        lat.spacing[a] = f.grid.spacing(a);
    }
    lat.finish_strides();
    lat.logv.assign(f.size(), -std::numeric_limits<double>::infinity());
    lat.active.assign(f.size(), 0);
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double v = f.values[i];
        if (v < -kNegativeSlack * scale) {
            throw std::invalid_argument("is_log_concave: negative value in f");
        }
        if (f.mask && !(*f.mask)[i]) continue;
        ++lat.candidates;
        if (v <= opt.floor) {
            ++lat.excluded;
            continue;
        }
        lat.logv[i] = std::log(v);
        lat.active[i] = 1;
    }
    return lat;
}

}  // namespace

LogConcavityReport is_log_concave(const GridFunction& f, Tolerance tol,
                                  const LogConcavityOptions& opt) {
    return check_lattice(lattice_from_function(f, opt), tol, opt);
}

LogConcavityReport is_jointly_log_concave(const KernelMatrix& k, Tolerance tol,
                                          const LogConcavityOptions& opt) {
    const Grid& g = k.grid;
    const std::size_t n = g.size();
    Lattice lat;
    lat.dims = 2 * g.dim();
    for (int half = 0; half < 2; ++half) {
        for (int a = 0; a < g.dim(); ++a) {
            const int ax = half * g.dim() + a;
            lat.shape[ax] = g.count(a);
            lat.lo[ax] = g.lo(a);
            lat.spacing[ax] = g.spacing(a);
        }
    }
    lat.finish_strides();
    lat.logv.assign(n * n, -std::numeric_limits<double>::infinity());
    lat.active.assign(n * n, 0);

    std::vector<char> in(n, 1);
    if (k.mask) {
        for (std::size_t i = 0; i < n; ++i) in[i] = (*k.mask)[i] ? 1 : 0;
    }
    const double scale = k.values.cwiseAbs().maxCoeff();
    LogConcavityReport positivity;
    for (std::size_t j = 0; j < n; ++j) {
        if (!in[j]) continue;
        const double weight_log = -0.5 * squared_norm(g.point(j));
        for (std::size_t i = 0; i < n; ++i) {
            if (!in[i]) continue;
            const double v = k(i, j);
            const std::size_t flat = i + n * j;
            ++lat.candidates;
            if (v < -kNegativeSlack * scale) {
                throw std::invalid_argument("is_jointly_log_concave: negative kernel entry");
            }
            if (v <= opt.floor) {
                // Strictly inside the domain the kernel must be positive.
                if (k.mask) {
                    positivity.pass = false;
                    positivity.worst_violation = std::numeric_limits<double>::infinity();
                    positivity.witness_kind = "positivity";
                    positivity.witness = {lat.witness(flat)};
                }
                ++lat.excluded;
                continue;
            }
            lat.logv[flat] = std::log(v) + weight_log;
            lat.active[flat] = 1;
        }
    }
    LogConcavityReport rep = check_lattice(lat, tol, opt);
    if (!positivity.pass) {
        positivity.tolerance = rep.tolerance;
        positivity.tests = rep.tests;
        positivity.excluded_fraction = rep.excluded_fraction;
        return positivity;
    }
    return rep;
}

MarginalResult prekopa_marginal(const GridFunction& f2d, std::span<const double> weights_y,
                                Tolerance tol, const LogConcavityOptions& opt) {
    const Grid& g = f2d.grid;
    if (g.dim() != 2) throw std::invalid_argument("prekopa_marginal: need a 2D grid");
    if (weights_y.size() != static_cast<std::size_t>(g.count(1))) {
        throw std::invalid_argument("prekopa_marginal: weights_y does not match the y axis");
    }
    LogConcavityReport joint = is_log_concave(f2d, tol, opt);
    std::vector<double> out(static_cast<std::size_t>(g.count(0)), 0.0);
    for (int j = 0; j < g.count(1); ++j) {
        for (int i = 0; i < g.count(0); ++i) {
            out[static_cast<std::size_t>(i)] += f2d.values[g.flat_index(i, j)] * weights_y[static_cast<std::size_t>(j)];
        }
    }
    GridFunction marginal(Grid::line(g.lo(0), g.hi(0), g.count(0)), std::move(out));
    LogConcavityReport check = is_log_concave(marginal, Tolerance::fixed(10.0 * joint.tolerance), opt);
    return {std::move(marginal), std::move(joint), std::move(check)};
}

LogConcavityReport eigenfunction_logconcavity(const SpectralDecomposition& dec, Tolerance tol,
                                              int mode, const LogConcavityOptions& opt) {
    const GridFunction phi = dec.mode(mode);
    for (std::size_t i : dec.mask.indices()) {
        if (!(phi.values[i] > 0.0)) {
            throw std::domain_error("eigenfunction_logconcavity: mode " + std::to_string(mode + 1) +
                                    " is not positive on the domain");
        }
    }
    const DomainMask deep = interior_mask(dec.mask, 2);
    std::vector<double> v(phi.size(), 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (deep[i]) v[i] = phi.values[i];
    }
    return is_log_concave(GridFunction(dec.grid, std::move(v), deep), tol, opt);
}

double kernel_limit_defect(const KernelProvider& provider, const SpectralDecomposition& dec,
                           double t) {
    if (!(t > 0.0)) throw std::invalid_argument("kernel_limit_defect: time must be positive");
    const KernelMatrix k = provider(t);
    const double growth = std::exp(dec.eigenvalues.at(0) * t);
    const auto idx = dec.mask.indices();
    double worst = 0.0;
    for (std::size_t j : idx) {
        const double pj = dec.modes(static_cast<Eigen::Index>(j), 0);
        for (std::size_t i : idx) {
            const double pi = dec.modes(static_cast<Eigen::Index>(i), 0);
            worst = std::max(worst, std::abs(growth * k(i, j) - pi * pj));
        }
    }
    return worst;
}

GridFunction product(const GridFunction& a, const GridFunction& b) {
    if (!a.grid.same_lattice(b.grid)) {
        throw std::invalid_argument("product: functions live on different grids");
    }
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values[i] * b.values[i];
    return GridFunction(a.grid, std::move(v), a.mask ? a.mask : b.mask);
}

}  // namespace oulab

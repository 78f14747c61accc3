#include "oulab/bm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "oulab/spectral.hpp"
#include "oulab/trotter.hpp"

namespace oulab {
namespace {

constexpr double kTraceRelTol = 1e-3;
constexpr double kEigenRelTol = 5e-3;

int resolve_modes(const ResolutionPolicy& p, int dim, std::size_t interior) {
    const int k = p.modes > 0 ? p.modes : default_modes(dim);
    return std::min<int>(k, static_cast<int>(interior));
}

SpectralDecomposition decompose(const ConvexDomain& domain, const ResolutionPolicy& policy) {
    const Grid grid = matched_grid(domain, policy.points_per_unit);
    const SchrodingerOperator op = assemble_operator(domain, grid);
    return solve_eigs(op, resolve_modes(policy, grid.dim(), op.interior.size()));
}

// Rejects mismatched pairs, bad s values and unbuildable grids before any solve.
void validate_pair(const ConvexDomain& omega0, const ConvexDomain& omega1,
                   const std::vector<double>& s_list, const ResolutionPolicy& policy) {
    if (s_list.empty()) throw std::invalid_argument("bm: empty s list");
    matched_grid(omega0, policy.points_per_unit);
    matched_grid(omega1, policy.points_per_unit);
    for (double s : s_list) matched_grid(minkowski_interpolate(omega0, omega1, s), policy.points_per_unit);
}

}  // namespace

double trace_function(const KernelMatrix& k, const QuadratureWeights& w) {
    if (!k.grid.same_lattice(w.grid)) {
        throw std::invalid_argument("trace_function: kernel and weights live on different grids");
    }
    double z = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) {
        if (k.mask && !(*k.mask)[i]) continue;
        z += k(i, i) * w.weights[i];
    }
    return z;
}

double trace_function(const KernelProvider& provider, const QuadratureWeights& w, double t) {
    if (!provider) throw std::invalid_argument("trace_function: kernel unavailable");
    if (!(t > 0.0)) throw std::invalid_argument("trace_function: time must be positive");
    return trace_function(provider(t), w);
}

TraceEigenvalue eigenvalue_from_trace(const TraceCurve& curve) {
    const auto& t = curve.times;
    const auto& z = curve.values;
    const std::size_t m = t.size();
    if (m < 3 || z.size() != m) {
        throw std::invalid_argument("eigenvalue_from_trace: need at least three samples");
    }
    for (std::size_t i = 0; i < m; ++i) {
        if (!(z[i] > 0.0)) throw std::invalid_argument("eigenvalue_from_trace: non-positive trace");
        if (i > 0 && !(t[i] > t[i - 1])) {
            throw std::invalid_argument("eigenvalue_from_trace: times must increase");
        }
        if (i > 0 && z[i] > z[i - 1]) {
            throw std::invalid_argument("eigenvalue_from_trace: trace increases in t");
        }
    }
    auto secant = [&](std::size_t i) {
        return -(std::log(z[i + 1]) - std::log(z[i])) / (t[i + 1] - t[i]);
    };
    TraceEigenvalue out;
    const double s2 = secant(m - 2);
    const double s1 = secant(m - 3);
    out.slope = s2;
    out.corrected = s2;
    out.tail_estimate = std::abs(s2 - s1);
    if (m >= 4) {
        const double s0 = secant(m - 4);
        const double d1 = s1 - s0, d2 = s2 - s1;
        const double denom = d2 - d1;
        const bool equal_steps = std::abs((t[m - 1] - t[m - 2]) - (t[m - 2] - t[m - 3])) < 1e-12 &&
                                 std::abs((t[m - 2] - t[m - 3]) - (t[m - 3] - t[m - 4])) < 1e-12;
        if (equal_steps && denom != 0.0 && std::abs(d2) < std::abs(d1)) {
            out.corrected = s2 - d2 * d2 / denom;
        }
    }
    return out;
}

std::string to_string(Method m) { return m == Method::Spectral ? "spectral" : "trotter"; }

Method parse_method(const std::string& name) {
    if (name == "spectral") return Method::Spectral;
    if (name == "trotter") return Method::Trotter;
    throw std::invalid_argument("unknown method '" + name + "' (expected spectral or trotter)");
}

double domain_trace(const ConvexDomain& domain, double t, Method method,
                    const ResolutionPolicy& policy) {
    if (method == Method::Spectral) return spectral_trace(decompose(domain, policy), t);
    const Grid grid = matched_grid(domain, policy.points_per_unit);
    const int levels =
        policy.trotter_levels >= 0 ? policy.trotter_levels : max_admissible_levels(grid, t);
    return trace_function(trotter_kernel(domain, grid, t, levels), gaussian_weights(grid));
}

TraceCurve trace_curve(const ConvexDomain& domain, const std::vector<double>& times,
                       Method method, const ResolutionPolicy& policy) {
    TraceCurve curve;
    curve.times = times;
    curve.provenance = method == Method::Spectral ? Provenance::Spectral : Provenance::Trotter;
    if (method == Method::Spectral) {
        const SpectralDecomposition dec = decompose(domain, policy);
        for (double t : times) curve.values.push_back(spectral_trace(dec, t));
    } else {
        for (double t : times) curve.values.push_back(domain_trace(domain, t, method, policy));
    }
    return curve;
}

double domain_eigenvalue(const ConvexDomain& domain, const ResolutionPolicy& policy) {
    ResolutionPolicy p = policy;
    p.modes = 1;
    return decompose(domain, p).eigenvalues.front();
}

bool BMReport::pass() const {
    return std::all_of(rows.begin(), rows.end(), [](const BMRow& r) { return r.pass; });
}

BMReport bm_trace_inequality(const ConvexDomain& omega0, const ConvexDomain& omega1,
                             const std::vector<double>& s_list, double t, Method method,
                             const ResolutionPolicy& policy) {
    validate_pair(omega0, omega1, s_list, policy);
    BMReport rep{"trace", t, {}};
    const double z0 = domain_trace(omega0, t, method, policy);
    const double z1 = domain_trace(omega1, t, method, policy);
    for (double s : s_list) {
        const ConvexDomain omega_s = minkowski_interpolate(omega0, omega1, s);
        const double zs = domain_trace(omega_s, t, method, policy);
        BMRow row;
        row.s = s;
        row.lhs = zs;
        row.rhs = std::pow(z0, 1.0 - s) * std::pow(z1, s);
        row.margin = row.lhs - row.rhs;
        row.tolerance = kTraceRelTol * zs;
        row.pass = row.margin >= -row.tolerance;
        rep.rows.push_back(row);
    }
    return rep;
}

BMReport bm_eigenvalue_inequality(const ConvexDomain& omega0, const ConvexDomain& omega1,
                                  const std::vector<double>& s_list,
                                  const ResolutionPolicy& policy) {
    validate_pair(omega0, omega1, s_list, policy);
    BMReport rep{"eigenvalue", 0.0, {}};
    const double l0 = domain_eigenvalue(omega0, policy);
    const double l1 = domain_eigenvalue(omega1, policy);
    for (double s : s_list) {
        const ConvexDomain omega_s = minkowski_interpolate(omega0, omega1, s);
        BMRow row;
        row.s = s;
        row.lhs = domain_eigenvalue(omega_s, policy);
        row.rhs = (1.0 - s) * l0 + s * l1;
        row.margin = row.rhs - row.lhs;
        row.tolerance = kEigenRelTol * std::abs(row.rhs);
        row.pass = row.margin >= -row.tolerance;
        rep.rows.push_back(row);
    }
    return rep;
}

std::vector<double> default_s_grid() { return {0.0, 0.25, 0.5, 0.75, 1.0}; }

}  // namespace oulab

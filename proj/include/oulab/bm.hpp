#pragma once

#include <string>
#include <vector>

#include "oulab/analysis.hpp"
#include "oulab/geometry.hpp"

namespace oulab {

/// Sampled t -> Z(t) = int_Omega p(x, x; t) dgamma(x).
struct TraceCurve {
    std::vector<double> times;
    std::vector<double> values;
    Provenance provenance = Provenance::Spectral;
};

/// Sum of K(t)_ii w_i over masked points (all points when no mask is attached).
double trace_function(const KernelMatrix& k, const QuadratureWeights& w);
double trace_function(const KernelProvider& provider, const QuadratureWeights& w, double t);

struct TraceEigenvalue {
    /// -(log Z(t_M) - log Z(t_{M-1})) / (t_M - t_{M-1}).
    double slope = 0.0;
    /// Aitken extrapolation of successive secant slopes when at least four
    /// samples exist; equals `slope` otherwise.
    double corrected = 0.0;
    /// |slope - previous secant slope|, a post hoc size of the lambda_2 tail.
    double tail_estimate = 0.0;
};

/// Throws std::invalid_argument for fewer than three samples, unsorted times
/// or a curve that is not strictly positive and nonincreasing.
TraceEigenvalue eigenvalue_from_trace(const TraceCurve& curve);

enum class Method { Spectral, Trotter };

std::string to_string(Method m);
Method parse_method(const std::string& name);

/// How each domain in a Brunn-Minkowski comparison is discretised.
struct ResolutionPolicy {
    /// Lattice cells per unit length, identical for every domain.
    double points_per_unit = 200.0;
    int modes = 0;  // 0 selects default_modes(dim)
    /// Trotter depth; -1 selects the finest level the substep guard admits.
    int trotter_levels = -1;
};

/// Z_Omega(t) for one domain on its matched grid.
double domain_trace(const ConvexDomain& domain, double t, Method method,
                    const ResolutionPolicy& policy);
TraceCurve trace_curve(const ConvexDomain& domain, const std::vector<double>& times,
                       Method method, const ResolutionPolicy& policy);

/// First eigenvalue on the matched grid.
double domain_eigenvalue(const ConvexDomain& domain, const ResolutionPolicy& policy);

struct BMRow {
    double s = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct BMReport {
    std::string form;  // "trace" or "eigenvalue"
    double t = 0.0;    // trace form only
    std::vector<BMRow> rows;

    bool pass() const;
};

/// Z(Omega_s) >= Z(Omega_0)^{1-s} Z(Omega_1)^s with relative tolerance 1e-3.
BMReport bm_trace_inequality(const ConvexDomain& omega0, const ConvexDomain& omega1,
                             const std::vector<double>& s_list, double t, Method method,
                             const ResolutionPolicy& policy);

/// lambda(Omega_s) <= (1-s) lambda(Omega_0) + s lambda(Omega_1), tolerance 0.5%
/// of the right side.
BMReport bm_eigenvalue_inequality(const ConvexDomain& omega0, const ConvexDomain& omega1,
                                  const std::vector<double>& s_list,
                                  const ResolutionPolicy& policy);

std::vector<double> default_s_grid();

}  // namespace oulab

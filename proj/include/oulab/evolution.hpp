#pragma once

#include <optional>
#include <string>
#include <vector>

#include "oulab/analysis.hpp"
#include "oulab/bm.hpp"
#include "oulab/geometry.hpp"

namespace oulab {

struct EvolutionOptions {
    Method method = Method::Spectral;
    /// Spectral mode count; 0 uses every interior point in 1D and
    /// default_modes(2) in 2D.
    int modes = 0;
    /// Trotter depth; -1 selects the finest admissible level per time.
    int trotter_levels = -1;
};

struct EvolutionResult {
    ConvexDomain domain;
    GridFunction u0;
    std::vector<double> times;
    std::vector<GridFunction> states;
    Provenance provenance = Provenance::Spectral;
    /// Spectral backend: tail e^{-lambda_K t} at the smallest time.
    double spectral_tail = 0.0;
};

/// u(x_i, t) = sum_j K(t)_ij u0_j w_j. u0 must vanish off the domain mask
/// (std::invalid_argument otherwise).
EvolutionResult evolve_dirichlet(const ConvexDomain& domain, const Grid& grid,
                                 const GridFunction& u0, const std::vector<double>& times,
                                 const EvolutionOptions& opt = {});

/// Same flow from a precomputed decomposition.
EvolutionResult evolve_spectral(const ConvexDomain& domain, const SpectralDecomposition& dec,
                                const GridFunction& u0, const std::vector<double>& times);

struct NamedDatum {
    std::string name;
    GridFunction values;
};

/// Built-in log-concave initial data on the domain mask: narrow, wide and
/// off-centre truncated Gaussians, a cone, a one-cell-smoothed indicator of an
/// inner box, and the constant.
std::vector<NamedDatum> builtin_family(const ConvexDomain& domain, const Grid& grid);

/// One named datum: any of the family names, or "bimodal" (a deliberately
/// non-log-concave sum of two separated bumps).
GridFunction builtin_datum(const std::string& name, const ConvexDomain& domain, const Grid& grid);

struct PreservationEntry {
    std::string name;
    LogConcavityReport precondition;
    bool skipped = false;
    std::vector<double> times;
    std::vector<LogConcavityReport> reports;
};

struct PreservationReport {
    std::vector<PreservationEntry> entries;

    bool all_pass() const;
    std::size_t failures() const;
    std::size_t checks() const;
};

PreservationReport preservation_suite(const ConvexDomain& domain, const Grid& grid,
                                      const std::vector<NamedDatum>& family,
                                      const std::vector<double>& times, Tolerance tol,
                                      const EvolutionOptions& opt = {});

/// ||u(t_small) - u0||_inf over u0's support restricted to points at least
/// four cells inside the domain. Throws when that set is empty.
double short_time_identity(const ConvexDomain& domain, const Grid& grid, const GridFunction& u0,
                           double t_small, const EvolutionOptions& opt = {});

/// sqrt(sum u^2 w) over the grid.
double gaussian_l2_norm(const GridFunction& u, const QuadratureWeights& w);

}  // namespace oulab

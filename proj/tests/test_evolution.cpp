#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "oulab/evolution.hpp"
#include "oulab/mehler.hpp"

using namespace oulab;

namespace {

const ConvexDomain kUnit = Interval{-1.0, 1.0};
const Grid kGrid = Grid::line(-1.0, 1.0, 401);
const std::vector<double> kTimes{0.05, 0.2, 1.0};

GridFunction cos2() {
    std::vector<double> v(kGrid.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double c = std::cos(0.5 * std::numbers::pi * kGrid.point(i)[0]);
        v[i] = i == 0 || i + 1 == v.size() ? 0.0 : c * c;
    }
    return GridFunction(kGrid, v);
}

double max_abs(const GridFunction& f) {
    double m = 0.0;
    for (double v : f.values) m = std::max(m, std::abs(v));
    return m;
}

EvolutionOptions trotter() {
    EvolutionOptions o;
    o.method = Method::Trotter;
    return o;
}

}  // namespace

TEST_CASE("first mode decays at its eigenvalue") {
    const SpectralDecomposition dec = solve_eigs(assemble_operator(kUnit, kGrid), 20);
    const GridFunction phi = dec.mode(0);
    const EvolutionResult r = evolve_spectral(kUnit, dec, phi, kTimes);
    REQUIRE(r.states.size() == 3);
    for (std::size_t k = 0; k < kTimes.size(); ++k) {
        const double decay = std::exp(-dec.eigenvalues[0] * kTimes[k]);
        for (std::size_t i = 0; i < kGrid.size(); ++i) CHECK(std::abs(r.states[k][i] - decay * phi[i]) < 1e-6);
    }
    CHECK(r.provenance == Provenance::Spectral);
}

TEST_CASE("domination by the whole-space flow") {
    const GridFunction u0 = cos2();
    for (double t : {0.2, 1.0}) {
        const GridFunction whole = whole_space_evolve(u0, t);
        const EvolutionResult d = evolve_dirichlet(kUnit, kGrid, u0, {t}, trotter());
        for (std::size_t i = 0; i < kGrid.size(); ++i) {
            CHECK(d.states[0][i] >= 0.0);
            CHECK(d.states[0][i] <= whole[i] + 1e-8);
        }
    }
}

TEST_CASE("input validation") {
    const GridFunction zero(kGrid, std::vector<double>(kGrid.size(), 0.0));
    for (const GridFunction& s : evolve_dirichlet(kUnit, kGrid, zero, kTimes).states) CHECK(max_abs(s) == 0.0);
    std::vector<double> edge(kGrid.size(), 0.0);
    edge[0] = 1.0;
    CHECK_THROWS_AS(evolve_dirichlet(kUnit, kGrid, GridFunction(kGrid, edge), kTimes), std::invalid_argument);
    CHECK_THROWS_AS(evolve_dirichlet(kUnit, kGrid, cos2(), {-0.1}), std::invalid_argument);
    CHECK_THROWS_AS(builtin_datum("sawtooth", kUnit, kGrid), std::invalid_argument);
}

TEST_CASE("built-in data on the unit interval") {
    const auto family = builtin_family(kUnit, kGrid);
    CHECK(family.size() == 6);
    const PreservationReport r = preservation_suite(kUnit, kGrid, family, kTimes, Tolerance::auto_scaled());
    CHECK(r.all_pass());
    CHECK(r.failures() == 0);
    CHECK(r.checks() == 18);
    for (const auto& e : r.entries) {
        CHECK(e.precondition.pass);
        CHECK_FALSE(e.skipped);
    }

    const std::vector<NamedDatum> odd{{"bimodal", builtin_datum("bimodal", kUnit, kGrid)}};
    const PreservationReport b = preservation_suite(kUnit, kGrid, odd, kTimes, Tolerance::auto_scaled());
    REQUIRE(b.entries.size() == 1);
    CHECK_FALSE(b.entries[0].precondition.pass);
    CHECK(b.entries[0].skipped);
    CHECK(b.entries[0].reports.empty());

    const SpectralDecomposition dec = solve_eigs(assemble_operator(kUnit, kGrid), 1);
    const std::vector<NamedDatum> ground{{"phi1", dec.mode(0)}};
    CHECK(preservation_suite(kUnit, kGrid, ground, kTimes, Tolerance::auto_scaled(), trotter()).all_pass());
}

TEST_CASE("built-in data on the unit square") {
    const ConvexDomain sq = AxisBox{{0.0, 0.0}, {1.0, 1.0}};
    const Grid g = Grid::plane({0.0, 0.0}, {1.0, 1.0}, {41, 41});
    const PreservationReport r =
        preservation_suite(sq, g, builtin_family(sq, g), kTimes, Tolerance::auto_scaled());
    CHECK(r.all_pass());
    CHECK(r.checks() == 18);
}

TEST_CASE("short time identity") {
    const GridFunction u0 = cos2();
    CHECK(short_time_identity(kUnit, kGrid, u0, 0.0) == 0.0);
    const double e1 = short_time_identity(kUnit, kGrid, u0, 0.01);
    const double e2 = short_time_identity(kUnit, kGrid, u0, 0.005);
    CHECK(e1 / e2 >= 1.6);
    CHECK(e1 / e2 <= 2.4);

    const SpectralDecomposition dec = solve_eigs(assemble_operator(kUnit, kGrid), 1);
    const GridFunction phi = dec.mode(0);
    const DomainMask inner = interior_mask(mask(kUnit, kGrid), 4);
    double peak = 0.0;
    for (std::size_t i = 0; i < kGrid.size(); ++i) {
        if (inner[i]) peak = std::max(peak, phi[i]);
    }
    const double expected = (1.0 - std::exp(-dec.eigenvalues[0] * 0.01)) * peak;
    CHECK(short_time_identity(kUnit, kGrid, phi, 0.01) == doctest::Approx(expected).epsilon(1e-6));
    CHECK(short_time_identity(kUnit, kGrid, phi, 0.01, trotter()) == doctest::Approx(expected).epsilon(0.3));

    std::vector<double> rim(kGrid.size(), 0.0);
    rim[2] = rim[398] = 1.0;
    CHECK_THROWS_AS(short_time_identity(kUnit, kGrid, GridFunction(kGrid, rim), 0.01), std::invalid_argument);
    CHECK_THROWS_AS(short_time_identity(kUnit, kGrid, u0, -1.0), std::invalid_argument);
}

TEST_CASE("semigroup, energy decay and positivity") {
    const GridFunction u0 = builtin_datum("gaussian_offset", kUnit, kGrid);
    const QuadratureWeights w = gaussian_weights(kGrid);
    const SpectralDecomposition dec = solve_eigs(assemble_operator(kUnit, kGrid), 399);

    const EvolutionResult full = evolve_spectral(kUnit, dec, u0, {0.3, 0.5});
    const EvolutionResult half = evolve_spectral(kUnit, dec, full.states[0], {0.2});
    double diff = 0.0;
    for (std::size_t i = 0; i < kGrid.size(); ++i) diff = std::max(diff, std::abs(full.states[1][i] - half.states[0][i]));
    CHECK(diff < 1e-8 * max_abs(full.states[1]));

    const EvolutionResult ft = evolve_dirichlet(kUnit, kGrid, u0, {0.3, 0.5}, trotter());
    const EvolutionResult ht = evolve_dirichlet(kUnit, kGrid, ft.states[0], {0.2}, trotter());
    diff = 0.0;
    for (std::size_t i = 0; i < kGrid.size(); ++i) diff = std::max(diff, std::abs(ft.states[1][i] - ht.states[0][i]));
    CHECK(diff < 5e-3 * max_abs(ft.states[1]));

    const double n0 = gaussian_l2_norm(u0, w);
    double proj = 0.0;
    for (std::size_t i = 0; i < kGrid.size(); ++i) proj += u0[i] * dec.modes(static_cast<Eigen::Index>(i), 0) * w[i];
    const EvolutionResult r = evolve_spectral(kUnit, dec, u0, kTimes);
    double prev = n0;
    for (std::size_t k = 0; k < kTimes.size(); ++k) {
        const double n = gaussian_l2_norm(r.states[k], w);
        CHECK(n < prev);
        CHECK(n <= std::exp(-dec.eigenvalues[0] * kTimes[k]) * n0 * (1.0 + 1e-10));
        CHECK(n >= std::exp(-dec.eigenvalues[0] * kTimes[k]) * std::abs(proj) * (1.0 - 1e-10));
        prev = n;
        for (std::size_t i = 0; i < kGrid.size(); ++i) CHECK(r.states[k][i] >= -1e-10 * max_abs(u0));
    }
    CHECK_THROWS_AS(gaussian_l2_norm(u0, gaussian_weights(Grid::line(-1.0, 1.0, 11))), std::invalid_argument);
}

TEST_CASE("Trotter and spectral flows agree") {
    const GridFunction u0 = builtin_datum("cone", kUnit, kGrid);
    const EvolutionResult s = evolve_dirichlet(kUnit, kGrid, u0, {0.2, 1.0});
    const EvolutionResult t = evolve_dirichlet(kUnit, kGrid, u0, {0.2, 1.0}, trotter());
    CHECK(t.provenance == Provenance::Trotter);
    for (std::size_t k = 0; k < 2; ++k) {
        double diff = 0.0;
        for (std::size_t i = 0; i < kGrid.size(); ++i) {
            diff = std::max(diff, std::abs(s.states[k][i] - t.states[k][i]));
            CHECK(t.states[k][i] >= 0.0);
        }
        // The dyadic boundary layer leaves a bias of a couple of percent at this resolution.
        CHECK(diff < 2.5e-2 * max_abs(s.states[k]));
    }
}

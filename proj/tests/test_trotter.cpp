#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>

#include "oulab/analysis.hpp"
#include "oulab/mehler.hpp"
#include "oulab/spectral.hpp"
#include "oulab/trotter.hpp"

using namespace oulab;

namespace {

const ConvexDomain kUnit = Interval{-1.0, 1.0};

// Largest K_ij - p_gamma(x_i, x_j; t) over all pairs.
double domination_excess(const KernelMatrix& k) {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k.size(); ++i) {
        for (std::size_t j = 0; j < k.size(); ++j) {
            const double p = mehler_gauss({k.grid.dim(), k.grid.point(i), k.grid.point(j), k.t});
            worst = std::max(worst, k(i, j) - p);
        }
    }
    return worst;
}

DomainMask full_mask(const Grid& g) { return {g, std::vector<char>(g.size(), 1)}; }

}  // namespace

TEST_CASE("masked Mehler kernel") {
    const Grid g = Grid::line(-2.0, 2.0, 41);
    const KernelMatrix full = masked_mehler(g, full_mask(g), 0.3);
    CHECK(max_abs_difference(full, sampled_mehler(g, 0.3)) == 0.0);

    DomainMask one{g, std::vector<char>(g.size(), 0)};
    one.inside[20] = 1;
    const KernelMatrix single = masked_mehler(g, one, 0.3);
    CHECK(single(20, 20) == mehler_gauss({1, g.point(20), g.point(20), 0.3}));
    CHECK(single.values.cwiseAbs().sum() == single(20, 20));

    const Grid u = Grid::line(-1.0, 1.0, 21);
    const KernelMatrix k = masked_mehler(u, mask(kUnit, u), 0.5);
    for (std::size_t j = 0; j < u.size(); ++j) {
        CHECK(k(0, j) == 0.0);
        CHECK(k(j, 20) == 0.0);
    }
    CHECK_THROWS_AS(masked_mehler(u, DomainMask{u, std::vector<char>(u.size(), 0)}, 0.5), std::invalid_argument);
}

TEST_CASE("compose") {
    const Grid g = Grid::line(-8.0, 8.0, 1601);
    const QuadratureWeights w = gaussian_weights(g);
    const DomainMask all = full_mask(g);
    const KernelMatrix k = masked_mehler(g, all, 0.25);
    const KernelMatrix k2 = compose(k, k, w, all);
    CHECK(k2.t == 0.5);
    CHECK(symmetry_defect(k2) == 0.0);
    double worst = 0.0;
    for (std::size_t i = 500; i <= 1100; i += 25) {
        for (std::size_t j = 500; j <= 1100; j += 25) {
            const double exact = mehler_gauss({1, g.point(i), g.point(j), 0.5});
            worst = std::max(worst, std::abs(k2(i, j) - exact) / exact);
        }
    }
    CHECK(worst < 1e-6);

    const Grid s = Grid::line(-1.0, 1.0, 41);
    const QuadratureWeights ws = gaussian_weights(s);
    const KernelMatrix a = masked_mehler(s, mask(kUnit, s), 0.2);
    const DomainMask none{s, std::vector<char>(s.size(), 0)};
    CHECK(compose(a, a, ws, none).values.cwiseAbs().maxCoeff() == 0.0);
    const KernelMatrix b = masked_mehler(s, mask(kUnit, s), 0.1);
    const KernelMatrix ab = compose(a, b, ws, mask(kUnit, s));
    CHECK(ab.t == doctest::Approx(0.3));
    CHECK(min_entry(ab) >= 0.0);
    CHECK_THROWS_AS(compose(a, masked_mehler(g, all, 0.1), ws, none), std::invalid_argument);
}

TEST_CASE("trotter kernel structure on the unit interval") {
    const Grid g = Grid::line(-1.0, 1.0, 401);
    const DomainMask m = mask(kUnit, g);
    CHECK(max_abs_difference(trotter_kernel(kUnit, g, 0.5, 0), masked_mehler(g, m, 0.5)) == 0.0);

    KernelMatrix prev = trotter_kernel(kUnit, g, 0.5, 1);
    for (int level = 1; level <= 6; ++level) {
        const KernelMatrix k = level == 1 ? prev : trotter_kernel(kUnit, g, 0.5, level);
        CHECK(k.detail == level);
        CHECK(k.provenance == Provenance::Trotter);
        CHECK(symmetry_defect(k) == 0.0);
        CHECK(min_entry(k) >= 0.0);
        CHECK(domination_excess(k) <= 1e-9);
        if (level > 1) CHECK((k.values - prev.values).maxCoeff() <= 1e-9);
        for (std::size_t j = 0; j < g.size(); ++j) CHECK(k(0, j) == 0.0);
        const LogConcavityReport r = is_jointly_log_concave(k, Tolerance::fixed(1e-6));
        CHECK(r.pass);
        prev = k;
    }
}

TEST_CASE("substep guard") {
    const Grid g = Grid::line(-1.0, 1.0, 401);
    const int lmax = max_admissible_levels(g, 0.5);
    CHECK(lmax == 13);
    CHECK_NOTHROW(check_substep(g, 0.5, lmax));
    CHECK_THROWS_AS(check_substep(g, 0.5, lmax + 1), std::invalid_argument);
    CHECK_THROWS_AS(check_substep(g, 0.5, 31), std::invalid_argument);
    CHECK_THROWS_AS(trotter_kernel(kUnit, g, 0.5, -1), std::invalid_argument);
    try {
        check_substep(g, 0.5, lmax + 1);
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("minimum usable h") != std::string::npos);
    }
    CHECK(max_admissible_levels(Grid::line(-1.0, 1.0, 801), 0.5) == 15);
}

TEST_CASE("dyadic iteration") {
    const Grid g = Grid::line(-1.0, 1.0, 201);
    const DyadicResult quick = dyadic_converge(kUnit, g, 0.5, 5, std::numeric_limits<double>::infinity());
    CHECK(quick.report.converged);
    CHECK(quick.report.level == 1);
    CHECK(quick.kernel.detail == 1);

    const DyadicResult slow = dyadic_converge(kUnit, g, 0.5, 6, 1e-12);
    CHECK_FALSE(slow.report.converged);
    CHECK(slow.report.history.size() == 6);
    CHECK(slow.kernel.detail == 6);
    // The boundary layer makes the changes decay like 2^{-L/2}.
    for (std::size_t l = 2; l < slow.report.history.size(); ++l) {
        CHECK(slow.report.history[l] < slow.report.history[l - 1]);
        CHECK(slow.report.history[l] / slow.report.history[l - 1] == doctest::Approx(std::sqrt(0.5)).epsilon(0.15));
    }
}

TEST_CASE("no boundary to feel") {
    const Grid g = Grid::line(-8.0, 8.0, 801);
    const ConvexDomain box = Interval{-8.0, 8.0};
    for (int level : {1, 3}) {
        const KernelMatrix k = trotter_kernel(box, g, 0.5, level);
        double worst = 0.0;
        for (std::size_t i = 250; i <= 550; i += 10) {
            for (std::size_t j = 250; j <= 550; j += 10) {
                const double exact = mehler_gauss({1, g.point(i), g.point(j), 0.5});
                worst = std::max(worst, std::abs(k(i, j) - exact) / exact);
            }
        }
        CHECK(worst < 1e-6);
        // Whole-space mass of a row.
        const QuadratureWeights w = gaussian_weights(g);
        for (std::size_t i = 300; i <= 500; i += 20) CHECK(std::abs(mass(k, w, i) - 1.0) < 1e-6);
    }
}

TEST_CASE("mass") {
    const Grid g = Grid::line(-1.0, 1.0, 401);
    const QuadratureWeights w = gaussian_weights(g);
    const KernelMatrix k = trotter_kernel(kUnit, g, 0.5, max_admissible_levels(g, 0.5));
    const double m0 = mass(k, w, 200);
    CHECK(m0 < 1.0);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(mass(k, w, i) <= 1.0 + 1e-6);

    const SpectralDecomposition dec = solve_eigs(assemble_operator(kUnit, g), 40);
    const double ms = mass(spectral_kernel(dec, 0.5), w, 200);
    // Boundary bias of the dyadic scheme leaves about 4e-3 at this resolution.
    CHECK(std::abs(m0 - ms) < 5e-3);

    KernelMatrix zero = k;
    zero.values.setZero();
    CHECK(mass(zero, w, 10) == 0.0);
    CHECK_THROWS_AS(mass(k, w, g.size()), std::out_of_range);
}

TEST_CASE("semigroup property") {
    const Grid g = Grid::line(-1.0, 1.0, 201);
    const QuadratureWeights w = gaussian_weights(g);
    const DomainMask m = mask(kUnit, g);
    const KernelMatrix k = trotter_kernel(kUnit, g, 0.25, 8);
    const KernelMatrix kk = compose(k, k, w, m);
    const KernelMatrix k2 = trotter_kernel(kUnit, g, 0.5, 9);
    const DomainMask in = interior_mask(m, 2);
    double worst = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        for (std::size_t j = 0; j < g.size(); ++j) {
            if (!in[i] || !in[j]) continue;
            worst = std::max(worst, std::abs(kk(i, j) - k2(i, j)));
            scale = std::max(scale, k2(i, j));
        }
    }
    CHECK(worst <= 5e-3 * scale);

    const SpectralDecomposition dec = solve_eigs(assemble_operator(kUnit, g), 60);
    const KernelMatrix s = spectral_kernel(dec, 0.25);
    const KernelMatrix ss = compose(s, s, w, m);
    const KernelMatrix s2 = spectral_kernel(dec, 0.5);
    CHECK(max_abs_difference(ss, s2) <= 5e-3 * s2.values.maxCoeff());
}

TEST_CASE("integrated domination") {
    const Grid g = Grid::line(-1.0, 1.0, 201);
    const QuadratureWeights w = gaussian_weights(g);
    const KernelMatrix k = trotter_kernel(kUnit, g, 0.4, 9);
    const KernelMatrix p = sampled_mehler(g, 0.4);
    Eigen::VectorXd f(static_cast<Eigen::Index>(g.size()));
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = g.point(i)[0];
        f(static_cast<Eigen::Index>(i)) = (1.0 + std::sin(3.0 * x)) * w[i];
    }
    const Eigen::VectorXd dirichlet = k.values * f, whole = p.values * f;
    CHECK((dirichlet - whole).maxCoeff() <= 1e-12);
    CHECK(dirichlet.minCoeff() >= 0.0);
}

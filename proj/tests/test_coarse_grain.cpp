#include "doctest.h"

#include <cmath>

#include "ecsim/coarse_grain.hpp"

using namespace ecsim;

namespace {

constexpr double kPi = 3.14159265358979323846;

double gauss(double z, double sigma = 1.0) {
    return std::exp(-0.5 * z * z / (sigma * sigma)) / (sigma * std::sqrt(2.0 * kPi));
}

CoarseState analytic_gaussian_state(int cells, double extent, double sigma, long long N) {
    CoarseState st;
    st.grid = Grid::line(cells, -extent, extent);
    st.rho.resize(cells);
    for (int i = 0; i < cells; ++i) st.rho[i] = gauss(st.grid.coord(0, i), sigma);
    double mass = integrate(st.grid, st.rho);
    for (double& v : st.rho) v /= mass;
    st.S.assign(cells, 0.0);
    st.N = N;
    return st;
}

CoarseState uniform_state(int cells, long long N) {
    CoarseState st;
    st.grid = Grid::line(cells, 0.0, 1.0);
    st.rho.assign(cells, 1.0);
    st.S.assign(cells, 0.0);
    st.N = N;
    return st;
}

} // namespace

TEST_CASE("kernel density estimate of a standard Gaussian") {
    const int n = 100000;
    Rng rng(2024);
    std::vector<double> samples(n);
    for (double& s : samples) s = rng.normal();
    Grid grid = Grid::line(512, -8.0, 8.0);
    CoarseState st = estimate_density(samples, n, grid);

    CHECK(std::abs(integrate(grid, st.rho) - 1.0) < 1e-8);
    double sup = 0.0;
    for (int i = 0; i < grid.size(); ++i)
        sup = std::max(sup, std::abs(st.rho[i] - gauss(grid.coord(0, i))));
    CHECK(sup < 0.02);
    CHECK(!st.clipped_warning);
}

TEST_CASE("kernel density handles point mass and uniform samples") {
    SUBCASE("all samples at one point keep unit mass") {
        std::vector<double> samples(200, 0.37);
        Grid grid = Grid::line(256, 0.0, 1.0);
        CoarseState st = estimate_density(samples, 200, grid);
        CHECK(std::abs(integrate(grid, st.rho) - 1.0) < 1e-8);
        // concentrated: the top cell carries far more than the uniform share
        double peak = *std::max_element(st.rho.begin(), st.rho.end());
        CHECK(peak > 50.0);
    }
    SUBCASE("uniform samples are flat in the bulk") {
        const int n = 200000;
        Rng rng(7);
        std::vector<double> samples(n);
        for (double& s : samples) s = rng.uniform(0.0, 1.0);
        Grid grid = Grid::line(256, -0.25, 1.25);
        CoarseState st = estimate_density(samples, n, grid);
        for (int i = 0; i < grid.size(); ++i) {
            double z = grid.coord(0, i);
            if (z < 0.15 || z > 0.85) continue; // bulk only
            CHECK(st.rho[i] == doctest::Approx(1.0).epsilon(0.05));
        }
    }
    SUBCASE("too few samples") {
        std::vector<double> samples(10, 0.5);
        Grid grid = Grid::line(64, 0.0, 1.0);
        CHECK_THROWS_AS((void)estimate_density(samples, 10, grid), Error);
    }
    SUBCASE("clipped mass is reported") {
        std::vector<double> samples(1000);
        Rng rng(3);
        for (double& s : samples) s = rng.normal();
        Grid grid = Grid::line(64, -0.5, 0.5); // drops most of the mass
        CoarseState st = estimate_density(samples, 1000, grid);
        CHECK(st.clipped_warning);
        CHECK(st.clipped_fraction > 0.3);
    }
}

TEST_CASE("cutoffs") {
    SUBCASE("uniform density on the unit interval") {
        CoarseState st = uniform_state(100, 10000);
        CutoffSpec cut = cutoffs(st, 1.0);
        for (double a : cut.a) CHECK(a == doctest::Approx(1e-4));
        CHECK(cut.a_mean == doctest::Approx(1e-4));
        CHECK(cut.R == doctest::Approx(1.0 * 10000.0));
        CHECK(cut.r == doctest::Approx(cut.R / cut.a_mean));
    }
    SUBCASE("doubling N divides a by 2^(1/d)") {
        CoarseState st1 = uniform_state(50, 5000);
        CoarseState st2 = uniform_state(50, 10000);
        CutoffSpec c1 = cutoffs(st1, 1.0);
        CutoffSpec c2 = cutoffs(st2, 1.0);
        CHECK(c2.a[0] == doctest::Approx(c1.a[0] / 2.0));
    }
    SUBCASE("R scaling with N at fixed L") {
        CoarseState st1 = uniform_state(50, 1000);
        CoarseState st4 = uniform_state(50, 4000);
        CHECK(cutoffs(st4, 2.0).R == doctest::Approx(4.0 * cutoffs(st1, 2.0).R / 1.0));
        // in d = 2 the same quadrupling would double R: R = L N^(1/2)
        CHECK(2.0 * std::sqrt(4000.0) == doctest::Approx(2.0 * std::sqrt(1000.0) * 2.0));
    }
    SUBCASE("Z_V scales as 1/N at fixed r and as r^(-2d)") {
        CoarseState st = uniform_state(50, 1000);
        CutoffSpec c = cutoffs(st, 1.0);
        double omega = unit_sphere_factor(1);
        CHECK(c.Z_V == doctest::Approx(1.0 / (2.0 * 1000.0 * omega * omega *
                                              std::pow(c.r, 2.0))));
    }
}

TEST_CASE("discrete acausal variety") {
    CutoffSpec cut;
    cut.d = 1;
    cut.N = 3;
    cut.a_mean = 0.01;
    cut.R = 10.0;
    cut.r = cut.R / cut.a_mean;
    cut.Z_V = 1.0; // unit normalization keeps the hand expansion legible

    SUBCASE("identical past patterns contribute nothing") {
        std::vector<double> samples{0.0, 1.0};
        std::vector<std::vector<double>> pasts{{0.5}, {0.5}};
        CHECK(discrete_acausal_variety(samples, 2, 1, pasts, cut) == 0.0);
    }
    SUBCASE("three samples match the hand-expanded pair sum") {
        std::vector<double> samples{0.0, 1.0, 2.5};
        std::vector<std::vector<double>> pasts{{0.5}, {0.25}, {-0.5}};
        // phi = 1/x for each single past offset: 2, 4, -2
        double expect = (2.0 - 4.0) * (2.0 - 4.0) + (2.0 + 2.0) * (2.0 + 2.0) +
                        (4.0 + 2.0) * (4.0 + 2.0);
        CHECK(discrete_acausal_variety(samples, 3, 1, pasts, cut) ==
              doctest::Approx(expect));
    }
    SUBCASE("translation invariance") {
        std::vector<double> samples{0.0, 0.8, 2.0, 3.1};
        std::vector<std::vector<double>> pasts{{0.5}, {0.25, -0.3}, {-0.5}, {1.0}};
        double base = discrete_acausal_variety(samples, 4, 1, pasts, cut);
        for (double& s : samples) s += 123.456;
        CHECK(discrete_acausal_variety(samples, 4, 1, pasts, cut) ==
              doctest::Approx(base).epsilon(1e-14));
    }
    SUBCASE("shell restriction removes far and near pairs") {
        CutoffSpec tight = cut;
        tight.R = 1.5;
        tight.a_mean = 0.9;
        std::vector<double> samples{0.0, 1.0, 10.0};
        std::vector<std::vector<double>> pasts{{0.5}, {0.25}, {-0.5}};
        // only the (0,1) pair is inside [0.9, 1.5]
        CHECK(discrete_acausal_variety(samples, 3, 1, pasts, tight) ==
              doctest::Approx((2.0 - 4.0) * (2.0 - 4.0)));
        tight.a_mean = 1.2; // now nothing survives
        CHECK(discrete_acausal_variety(samples, 3, 1, pasts, tight) == 0.0);
    }
}

TEST_CASE("continuum variety and the Bohm functional") {
    CoarseState st = analytic_gaussian_state(2048, 10.0, 1.0, 100000);
    CutoffSpec cut = cutoffs(st, 1.0);

    SUBCASE("Gaussian Fisher term is 1/sigma^2") {
        VarietyReport rep = continuum_variety(st, cut);
        CHECK(rep.fisher_term == doctest::Approx(1.0).epsilon(5e-3));
        // independent quadrature oracle with the analytic derivative
        double oracle = 0.0;
        for (int i = 0; i < st.grid.size(); ++i) {
            double z = st.grid.coord(0, i);
            double rho = gauss(z);
            oracle += rho * z * z; // (rho'/rho)^2 = z^2 for sigma = 1
        }
        oracle *= st.grid.cell_volume();
        CHECK(rep.fisher_term == doctest::Approx(oracle).epsilon(1e-4));
        CHECK(rep.constant_term == doctest::Approx(1.0 / (cut.R * cut.R)).epsilon(1e-6));
    }
    SUBCASE("uniform density has zero Fisher and correction terms") {
        CoarseState ust = uniform_state(128, 1000);
        CutoffSpec ucut = cutoffs(ust, 1.0);
        VarietyReport rep = continuum_variety(ust, ucut);
        CHECK(rep.fisher_term == doctest::Approx(0.0));
        CHECK(rep.correction_term == doctest::Approx(0.0));
    }
    SUBCASE("scaling z -> lambda z sends Fisher to Fisher / lambda^2") {
        CoarseState wide = analytic_gaussian_state(2048, 20.0, 2.0, 100000);
        CutoffSpec wcut = cutoffs(wide, 1.0);
        VarietyReport rep = continuum_variety(wide, wcut);
        CHECK(rep.fisher_term == doctest::Approx(0.25).epsilon(5e-3));
    }
    SUBCASE("coarse grids are rejected") {
        CoarseState coarse = analytic_gaussian_state(10, 10.0, 1.0, 1000);
        CutoffSpec ccut = cutoffs(coarse, 1.0);
        CHECK_THROWS_AS((void)continuum_variety(coarse, ccut), Error);
    }

    SUBCASE("Bohm functional value and integration-by-parts identity") {
        CHECK(bohm_functional(st, 1.0, 1.0) == doctest::Approx(0.125).epsilon(1e-3));
        // int rho (rho'/rho)^2 = -4 int sqrt(rho) (sqrt(rho))'' on decaying rho
        std::vector<double> amp(st.grid.size());
        for (int i = 0; i < st.grid.size(); ++i) amp[i] = std::sqrt(st.rho[i]);
        std::vector<double> lap = laplacian(st.grid, amp, BoundaryMode::Walls);
        double rhs = 0.0;
        for (int i = 0; i < st.grid.size(); ++i) rhs += amp[i] * lap[i];
        rhs *= -4.0 * st.grid.cell_volume();
        double lhs = 8.0 * bohm_functional(st, 1.0, 1.0);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));
    }
    SUBCASE("functional derivative matches the pointwise Bohm potential") {
        // bump-probe the functional at a few locations
        std::vector<double> q = bohm_potential_field(st, 1.0, 1.0);
        for (double z0 : {0.0, 0.8, -1.3}) {
            const double width = 0.05;
            std::vector<double> bump(st.grid.size());
            double bump_mass = 0.0;
            for (int i = 0; i < st.grid.size(); ++i) {
                double t = (st.grid.coord(0, i) - z0) / width;
                bump[i] = std::exp(-0.5 * t * t);
                bump_mass += bump[i] * st.grid.cell_volume();
            }
            const double eps = 1e-7;
            CoarseState plus = st, minus = st;
            for (int i = 0; i < st.grid.size(); ++i) {
                plus.rho[i] += eps * bump[i];
                minus.rho[i] -= eps * bump[i];
            }
            double fd = (bohm_functional(plus, 1.0, 1.0) - bohm_functional(minus, 1.0, 1.0)) /
                        (2.0 * eps);
            // smeared pointwise Q against the same bump
            double smeared = 0.0;
            for (int i = 0; i < st.grid.size(); ++i)
                smeared += q[i] * bump[i] * st.grid.cell_volume();
            CHECK(fd / bump_mass == doctest::Approx(smeared / bump_mass).epsilon(1e-4));
        }
    }
}

TEST_CASE("nonlinear correction") {
    SUBCASE("uniform density gives zero") {
        CoarseState ust = uniform_state(128, 1000);
        CutoffSpec ucut = cutoffs(ust, 1.0);
        CHECK(nonlinear_correction(ust, ucut, 1.0, 1.0) == doctest::Approx(0.0));
    }
    SUBCASE("doubling N at fixed r shrinks the correction by 4 in d = 1") {
        CoarseState st = analytic_gaussian_state(1024, 8.0, 1.0, 1000);
        CutoffSpec cut = cutoffs(st, 1.0);
        double c1 = nonlinear_correction(st, cut, 1.0, 1.0);
        CoarseState st2 = st;
        st2.N = 2000;
        CutoffSpec cut2 = cut; // hold the dimensionless ratio fixed
        cut2.N = 2000;
        double c2 = nonlinear_correction(st2, cut2, 1.0, 1.0);
        CHECK(c2 == doctest::Approx(c1 / 4.0).epsilon(1e-12));
    }
    SUBCASE("magnitude equals the quadrature oracle times the prefactor") {
        CoarseState st = analytic_gaussian_state(4096, 10.0, 1.0, 5000);
        CutoffSpec cut = cutoffs(st, 1.0);
        // oracle: for a standard Gaussian, (lap rho / rho)^2 = (z^2 - 1)^2
        double integral = 0.0;
        for (int i = 0; i < st.grid.size(); ++i) {
            double z = st.grid.coord(0, i);
            double t = z * z - 1.0;
            integral += gauss(z) * t * t;
        }
        integral *= st.grid.cell_volume();
        double want = -1.0 / 8.0 * std::pow(5000.0, -2.0) * cut.r * cut.r * integral;
        CHECK(nonlinear_correction(st, cut, 1.0, 1.0) ==
              doctest::Approx(want).epsilon(1e-3));
    }
}

TEST_CASE("resolution variety functional") {
    DensityModel gauss_model;
    gauss_model.kind = DensityModel::Kind::Gaussian;

    SUBCASE("converges to Fisher + constant") {
        ResolutionVariety rv = variety_at_resolution(gauss_model, 100000, 1.0);
        CHECK(rv.value == doctest::Approx(rv.fisher_region + rv.constant_region)
                              .epsilon(1e-4));
        CHECK(rv.fisher_region == doctest::Approx(1.0).epsilon(2e-3));
    }
    SUBCASE("uniform model reduces to the constant term") {
        DensityModel uni;
        uni.kind = DensityModel::Kind::Uniform;
        uni.lo = 0.0;
        uni.hi = 1.0;
        ResolutionVariety rv = variety_at_resolution(uni, 10000, 1.0);
        CHECK(rv.value == doctest::Approx(rv.constant_region).epsilon(1e-12));
        CHECK(rv.fisher_region == doctest::Approx(0.0));
    }
}

TEST_CASE("convergence study") {
    DensityModel model;
    model.kind = DensityModel::Kind::Gaussian;

    SUBCASE("needs three N values") {
        CHECK_THROWS_AS(
            (void)convergence_study(model, {1000, 10000}, 1.0, 1),
            Error);
    }
    SUBCASE("deterministic remainder scales like 1/N^2 in d = 1") {
        ConvergenceTable table =
            convergence_study(model, {1000, 4000, 16000}, 1.0, 11);
        CHECK(table.slope_det == doctest::Approx(-2.0).epsilon(0.2));
        for (const auto& row : table.rows) CHECK(row.diff_det > 0.0);
    }
    SUBCASE("same seed reproduces the table exactly") {
        auto t1 = convergence_study(model, {1000, 2000, 4000}, 1.0, 5);
        auto t2 = convergence_study(model, {1000, 2000, 4000}, 1.0, 5);
        REQUIRE(t1.rows.size() == t2.rows.size());
        for (std::size_t i = 0; i < t1.rows.size(); ++i) {
            CHECK(t1.rows[i].discrete_det == t2.rows[i].discrete_det);
            CHECK(t1.rows[i].discrete_kde == t2.rows[i].discrete_kde);
        }
    }
    SUBCASE("uniform model rows sit on the constant") {
        DensityModel uni;
        uni.kind = DensityModel::Kind::Uniform;
        uni.lo = 0.0;
        uni.hi = 1.0;
        ConvergenceTable table = convergence_study(uni, {1000, 2000, 4000}, 1.0, 9);
        for (const auto& row : table.rows)
            CHECK(row.discrete_det == doctest::Approx(row.constant).epsilon(1e-10));
    }
}

TEST_CASE("mixture model Fisher information") {
    DensityModel mix;
    mix.kind = DensityModel::Kind::Mixture;
    mix.mean = -1.0;
    mix.sigma = 1.0;
    mix.mean2 = 1.5;
    mix.sigma2 = 0.5;
    mix.w2 = 0.4;
    double f = mix.fisher();
    CHECK(f > 1.0); // more structure than either component alone

    // resolution functional converges onto the analytic prediction
    ResolutionVariety rv = variety_at_resolution(mix, 200000, 1.0);
    CHECK(rv.value == doctest::Approx(rv.fisher_region + rv.constant_region).epsilon(1e-4));
}

TEST_CASE("pointwise UV cutoff drives the pair shell") {
    CoarseState st;
    st.grid = Grid::line(100, 0.0, 1.0);
    st.rho.assign(100, 1.0);
    st.S.assign(100, 0.0);
    st.N = 100; // a = 1e-2 everywhere
    CutoffSpec cut = cutoffs(st, 1.0);
    CHECK(cut.a_at(std::vector<double>{0.5}) == doctest::Approx(1e-2));

    std::vector<double> samples{0.100, 0.105, 0.300};
    std::vector<std::vector<double>> pasts{{0.5}, {0.25}, {-0.5}};
    CutoffSpec wide = cut;
    wide.R = 10.0;
    wide.Z_V = 1.0;
    // pair (0,1) is closer than a and must drop out; phi = 2, 4, -2
    double expect = (2.0 + 2.0) * (2.0 + 2.0) + (4.0 + 2.0) * (4.0 + 2.0);
    CHECK(discrete_acausal_variety(samples, 3, 1, pasts, wide) == doctest::Approx(expect));
}

TEST_CASE("multi-particle normalization mode") {
    const int n = 500;
    Rng rng(88);
    std::vector<double> samples(n);
    for (double& s : samples) s = rng.normal();
    Grid grid = Grid::line(256, -8.0, 8.0);
    CoarseState st = estimate_density(samples, n, grid, 3.0);
    CHECK(integrate(grid, st.rho) == doctest::Approx(3.0).epsilon(1e-8));
}

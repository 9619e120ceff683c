#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mjspectra/errors.hpp"
#include "mjspectra/mj.hpp"
#include "mjspectra/num.hpp"

using namespace mjs;
using namespace mjs::mj;

namespace {

Mechanical cos_mech() {
    Mechanical m;
    m.V.fx = TrigSeries::harmonic_cos(0.3, 1);
    m.V.fy = TrigSeries::harmonic_cos(0.2, 1);
    return m;
}

struct Pair {
    HamiltonianModel H;
    HamiltonianModel HH;
    Liouville liouville;  // the script-H model in Liouville form
    PairEnergies energies{1.0, 1.0};
};

Pair example1_pair() {
    Pair p;
    Mechanical mech = cos_mech();
    p.H = mech;
    p.liouville = liouville_twin(mech, 1.0);
    p.HH = p.liouville;
    return p;
}

PhasePoint random_sigma_point(const Mechanical& mech, double E, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ang(0.0, num::two_pi);
    const double x1 = ang(rng), x2 = ang(rng), th = ang(rng);
    const double r = std::sqrt(2.0 * (E - mech.V(x1, x2)));
    return PhasePoint{{x1, x2}, {r * std::cos(th), r * std::sin(th)}};
}

}  // namespace

TEST_CASE("time factor is 1 for identical Hamiltonians") {
    auto m = make_liouville(TrigSeries::harmonic_cos(0.3, 1, 1.0), TrigSeries::harmonic_cos(0.2, 1));
    PhasePoint pt{{0.3, 1.2}, {0.9, 0.3}};
    const double E = eval(m, pt);
    CHECK(time_factor(m, m, pt, {E, E}) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("example-1 pair: G equals 1/(E - V) on the shared surface") {
    Pair p = example1_pair();
    const Mechanical& mech = std::get<Mechanical>(p.H);
    std::mt19937_64 rng(99);
    for (int i = 0; i < 25; ++i) {
        const PhasePoint pt = random_sigma_point(mech, 1.0, rng);
        const double G = time_factor(p.H, p.HH, pt, p.energies);
        const double want = 1.0 / (1.0 - mech.V(pt.x[0], pt.x[1]));
        CHECK(G == doctest::Approx(want).epsilon(1e-8));
        CHECK(parallelism(p.H, p.HH, pt).defect <= 1e-8);
    }
}

TEST_CASE("Katok vs round sphere: parallel on the equator only") {
    HamiltonianModel katok = make_katok(0.5);
    HamiltonianModel round = make_katok(0.0);
    // off the equator, at a point on both unit levels
    PhasePoint off{{0.7, 0.5}, {0.0, 1.0}};
    CHECK(eval(katok, off) == doctest::Approx(1.0));
    CHECK(eval(round, off) == doctest::Approx(1.0));
    CHECK_THROWS_AS(time_factor(katok, round, off, {1.0, 1.0}), Error);
    CHECK(parallelism(katok, round, off).defect > 1e-2);
    // on the equator the fields are parallel (different levels)
    PhasePoint eq{{0.3, 0.0}, {1.0 / 1.5, 0.0}};
    CHECK(parallelism(katok, round, eq).defect <= 1e-12);
}

TEST_CASE("off-surface points are rejected") {
    Pair p = example1_pair();
    PhasePoint pt{{0.1, 0.2}, {0.5, 0.5}};  // generic, not on either level
    CHECK_THROWS_AS(time_factor(p.H, p.HH, pt, p.energies), Error);
}

TEST_CASE("average of G: grid quadrature is stable and positive") {
    Pair p = example1_pair();
    auto chart = aa::TorusChart::build(p.liouville, 1.0, -0.6);
    auto a32 = average_G(p.H, p.HH, chart, p.energies, 32, 32);
    auto a64 = average_G(p.H, p.HH, chart, p.energies, 64, 64);
    for (double g : a64.samples) CHECK(g > 0.0);
    CHECK(std::abs(a64.value - a32.value) <= 1e-9);
}

TEST_CASE("average of G matches the ergodic average along the script-H flow") {
    Pair p = example1_pair();
    auto chart = aa::TorusChart::build(p.liouville, 1.0, -0.6);
    auto avg = average_G(p.H, p.HH, chart, p.energies, 64, 64);

    // Hann-weighted time average along a trajectory of the script-H flow
    // (the flow is uniform in the chart angles, so its time average is the
    // plain angle average)
    const PhasePoint pt0 = chart.point_at_angle({0.4, 2.6});
    IntegrateOptions opts;
    opts.sample_dt = 0.05;
    const double T = 2000.0;
    Trajectory tr = integrate(p.HH, pt0, T, 1e-10, opts);
    // the long trajectory drifts slightly off the surface (within the drift
    // budget), so use the ungated parallelism factor
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const double w = std::pow(std::sin(num::two_pi / 2.0 * tr.t[i] / T), 2);
        num += w * parallelism(p.H, p.HH, tr.points[i]).G;
        den += w;
    }
    CHECK(num / den == doctest::Approx(avg.value).epsilon(1e-5));
}

TEST_CASE("conjugacy solve: constant factor gives f = 0") {
    std::vector<double> G(64 * 64, 2.5);
    auto data = solve_conjugacy(G, 64, 64, {1.0, 1.6180339887}, 16);
    CHECK(data.avg_G == doctest::Approx(2.5));
    CHECK(data.residual <= 1e-14);
    for (auto c : data.fhat) CHECK(std::abs(c) <= 1e-15);
    CHECK(verify_det_identity(data) <= 1e-13);
}

TEST_CASE("conjugacy solve: single-mode case is exact") {
    const int n = 64;
    const double eps = 0.2;
    const Eigen::Vector2d omega(1.3, 0.7213);
    std::vector<double> G(n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            G[i * n + j] = 1.0 / (1.0 + eps * std::cos(num::two_pi * i / n));
    auto data = solve_conjugacy(G, n, n, omega, 8);
    CHECK(data.avg_G == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(data.residual <= 1e-14);
    // f = (eps / omega1) sin(phi1)
    for (double phi : {0.3, 1.9, 4.4})
        CHECK(data.f_value(phi, 0.77) == doctest::Approx(eps / omega[0] * std::sin(phi))
                                             .epsilon(1e-12));
    // hermitian coefficients (f is real)
    for (int k1 = -8; k1 <= 8; ++k1)
        for (int k2 = -8; k2 <= 8; ++k2)
            CHECK(std::abs(data.coeff(k1, k2) - std::conj(data.coeff(-k1, -k2))) <= 1e-15);
    CHECK(verify_det_identity(data) <= 1e-13);
}

TEST_CASE("conjugacy solve: band-limited random factor at K_max = 64") {
    const int n = 256;
    const Eigen::Vector2d omega(1.0, 0.5 * (1.0 + std::sqrt(5.0)));
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> amp(-1.0, 1.0);
    // random trigonometric polynomial of low band and modest amplitude
    std::vector<double> a(5), b(5), c(5), d(5);
    for (int m = 0; m < 5; ++m) {
        a[m] = 0.03 * amp(rng);
        b[m] = 0.03 * amp(rng);
        c[m] = 0.03 * amp(rng);
        d[m] = 0.03 * amp(rng);
    }
    std::vector<double> G(n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double x = num::two_pi * i / n, y = num::two_pi * j / n;
            double v = 1.0;
            for (int m = 1; m <= 4; ++m) {
                v += a[m] * std::cos(m * x) + b[m] * std::sin(m * x) + c[m] * std::cos(m * y) +
                     d[m] * std::sin(m * y);
                v += 0.02 * std::cos(m * (x + y)) * a[m];
            }
            G[i * n + j] = v;
        }
    auto data = solve_conjugacy(G, n, n, omega, 64);
    CHECK(data.residual <= 1e-8);
    const double defect = verify_det_identity(data);
    // the determinant defect IS the cohomological residual
    CHECK(std::abs(defect - data.residual) <= 1e-12);

    // doubling K_max shrinks the residual
    auto data32 = solve_conjugacy(G, n, n, omega, 32);
    CHECK(data.residual <= data32.residual + 1e-15);
}

TEST_CASE("small divisors abort the solve") {
    const int n = 32;
    std::vector<double> G(n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            G[i * n + j] = 1.0 + 0.1 * std::cos(num::two_pi * (i + j) / n);
    // omega exactly resonant with k = (1, -1)
    CHECK_THROWS_AS(solve_conjugacy(G, n, n, {1.0, 1.0}, 8), Error);
}

TEST_CASE("full conjugacy construction on the example-1 pair") {
    Pair p = example1_pair();
    // pick a strongly nonresonant torus: golden-ratio frequency ratio
    const double golden = 0.5 * (1.0 + std::sqrt(5.0));
    double c_target;
    {
        auto w_lo = aa::TorusChart::build(p.liouville, 1.0, -0.75).omega();
        auto w_hi = aa::TorusChart::build(p.liouville, 1.0, -0.45).omega();
        CHECK(((w_lo[0] / w_lo[1] - golden) * (w_hi[0] / w_hi[1] - golden) < 0));
        c_target = aa::find_torus_with_ratio(p.liouville, 1.0, golden, -0.75, -0.45);
    }
    auto chart = aa::TorusChart::build(p.liouville, 1.0, c_target);
    auto kam = aa::kam_membership(chart.omega(), {0.01, 1.5, 64});
    CHECK(kam.pass);

    auto data = build_conjugacy(p.H, p.HH, chart, p.energies, 256, 256, 64);
    CHECK(data.residual <= 1e-8);
    CHECK(verify_det_identity(data) <= 1e-8);

    // the harmonic mean on the resampled grid reproduces the arithmetic
    // chart average (the frequency-rescale constant)
    auto avg = average_G(p.H, p.HH, chart, p.energies, 128, 128);
    CHECK(data.avg_G == doctest::Approx(avg.value).epsilon(1e-8));
}

TEST_CASE("frequency rescale: identical pair on the flat torus is exact") {
    Liouville flat{TrigSeries::constant(1.0), TrigSeries()};
    auto chart = aa::TorusChart::build(flat, 1.0, -0.64);
    HamiltonianModel m = flat;
    RescaleOptions opts;
    opts.T = 50.0;
    auto rep = verify_frequency_rescale(m, m, chart, {1.0, 1.0}, opts);
    CHECK(rep.avg_G == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(rep.rel_err <= 1e-10);
}

TEST_CASE("frequency rescale on the example-1 pair") {
    Pair p = example1_pair();
    const double golden = 0.5 * (1.0 + std::sqrt(5.0));
    const double c = aa::find_torus_with_ratio(p.liouville, 1.0, golden, -0.75, -0.45);
    auto chart = aa::TorusChart::build(p.liouville, 1.0, c);
    RescaleOptions opts;
    opts.T = 400.0;
    auto rep = verify_frequency_rescale(p.H, p.HH, chart, p.energies, opts);
    CHECK(rep.rel_err <= 1e-4);
}

TEST_CASE("orbit coincidence of the example-1 pair") {
    Pair p = example1_pair();
    std::mt19937_64 rng(7);
    const Mechanical& mech = std::get<Mechanical>(p.H);
    for (int i = 0; i < 3; ++i) {
        const PhasePoint pt = random_sigma_point(mech, 1.0, rng);
        auto rep = orbit_coincidence(p.H, p.HH, pt, 10.0, 1e-11);
        CHECK(rep.hausdorff <= 1e-5);
        CHECK(rep.max_defect <= 1e-8);
    }
}

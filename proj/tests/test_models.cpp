#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mjspectra/errors.hpp"
#include "mjspectra/models.hpp"
#include "mjspectra/num.hpp"

using namespace mjs;

namespace {

Liouville flat_liouville() { return Liouville{TrigSeries::constant(1.0), TrigSeries()}; }

Mechanical cos_potential_model() {
    Mechanical m;
    m.V.fx = TrigSeries::harmonic_cos(0.3, 1);
    m.V.fy = TrigSeries::harmonic_cos(0.2, 1);
    return m;
}

// central-difference gradient oracle
Gradient fd_grad(const HamiltonianModel& model, const PhasePoint& pt, double h = 1e-6) {
    Gradient g;
    for (int i = 0; i < 2; ++i) {
        PhasePoint a = pt, b = pt;
        a.x[i] += h;
        b.x[i] -= h;
        g.dx[i] = (eval(model, a) - eval(model, b)) / (2 * h);
        a = pt;
        b = pt;
        a.p[i] += h;
        b.p[i] -= h;
        g.dp[i] = (eval(model, a) - eval(model, b)) / (2 * h);
    }
    return g;
}

void check_grad_against_fd(const HamiltonianModel& model, const PhasePoint& pt) {
    const Gradient ga = grad(model, pt);
    const Gradient gn = fd_grad(model, pt);
    const double scale = std::max({1.0, ga.dx.norm(), ga.dp.norm()});
    CHECK((ga.dx - gn.dx).norm() / scale < 1e-6);
    CHECK((ga.dp - gn.dp).norm() / scale < 1e-6);
}

}  // namespace

TEST_CASE("flat Liouville symbol value") {
    HamiltonianModel m = flat_liouville();
    CHECK(eval(m, {{0.0, 0.0}, {0.6, 0.8}}) == doctest::Approx(1.0).epsilon(1e-15));
    Gradient g = grad(m, {{0.2, 0.4}, {0.6, 0.8}});
    CHECK(g.dx.norm() == 0.0);
    CHECK(g.dp[0] == doctest::Approx(1.2));
    CHECK(g.dp[1] == doctest::Approx(1.6));
}

TEST_CASE("Katok symbol on the equator is |p1| + alpha p1") {
    HamiltonianModel m = make_katok(0.5);
    CHECK(eval(m, {{0.0, 0.0}, {1.0 / 1.5, 0.0}}) == doctest::Approx(1.0).epsilon(1e-15));
    // section q2 = 0, p2 = 0 exactly
    for (double p1 : {0.4, -0.9, 2.0}) {
        const double expect = std::abs(p1) + 0.5 * p1;
        CHECK(eval(m, {{1.3, 0.0}, {p1, 0.0}}) == doctest::Approx(expect).epsilon(1e-15));
    }
    // not reversible: H(x, p) != H(x, -p) at generic points
    PhasePoint pt{{0.3, 0.2}, {0.7, 0.1}};
    PhasePoint rpt = pt;
    rpt.p = -pt.p;
    CHECK(std::abs(eval(m, pt) - eval(m, rpt)) > 0.1);
    CHECK_THROWS_AS(eval(m, {{0.0, 1.6}, {1.0, 0.0}}), Error);  // outside the chart
}

TEST_CASE("water-wave symbol evaluation (independent tanh oracle)") {
    auto m = WaterWave{BiTrigSeries::constant(0.7), BiTrigSeries::constant(0.0)};
    // 1.2 * tanh(0.7 * 1.2) computed with 30-digit arithmetic
    CHECK(eval(HamiltonianModel(m), {{0.1, 2.0}, {1.2, 0.0}}) ==
          doctest::Approx(0.822970874674913457).epsilon(1e-14));
}

TEST_CASE("mechanical gradient example V = 0.3 cos x1") {
    Mechanical mech;
    mech.V.fx = TrigSeries::harmonic_cos(0.3, 1);
    HamiltonianModel m = mech;
    Gradient g = grad(m, {{num::two_pi / 4.0, 0.0}, {0.1, 0.2}});
    CHECK(g.dx[0] == doctest::Approx(-0.3).epsilon(1e-14));
    CHECK(g.dx[1] == doctest::Approx(0.0));
}

TEST_CASE("gradients match central differences at random valid points, every variant") {
    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<double> ang(0.0, num::two_pi);
    std::uniform_real_distribution<double> mom(-1.5, 1.5);

    std::vector<HamiltonianModel> models;
    models.push_back(
        make_liouville(TrigSeries::harmonic_cos(0.3, 1, 1.0), TrigSeries::harmonic_cos(0.2, 1)));
    models.push_back(cos_potential_model());
    models.push_back(jacobi_from_mechanical(cos_potential_model(), 1.0));
    models.push_back(WaterWave{BiTrigSeries::constant(0.9), BiTrigSeries::constant(0.05)});
    models.push_back(make_katok(0.5));

    for (const auto& m : models) {
        int done = 0;
        while (done < 100) {
            PhasePoint pt{{ang(rng), ang(rng)}, {mom(rng), mom(rng)}};
            if (std::holds_alternative<KatokRanders>(m)) pt.x[1] = 0.4 * (ang(rng) - 3.1);
            if (pt.p.norm() < 0.2) continue;  // stay away from the p = 0 cone
            check_grad_against_fd(m, pt);
            ++done;
        }
    }
}

TEST_CASE("liouville integral closed forms") {
    HamiltonianModel flat = flat_liouville();
    CHECK(liouville_integral(flat, {{0.0, 0.0}, {0.6, 0.8}}) ==
          doctest::Approx(-0.64).epsilon(1e-15));
    HamiltonianModel ones =
        make_liouville(TrigSeries::constant(1.0), TrigSeries::constant(1.0));
    CHECK(liouville_integral(ones, {{0.3, 0.9}, {1.0, 0.0}}) ==
          doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("waterwave_radius closed-form and bisection oracle cases") {
    // deep-water limit: tanh saturates, |p| = E
    WaterWave deep{BiTrigSeries::constant(1000.0), BiTrigSeries::constant(0.0)};
    CHECK(waterwave_radius(deep, {0.0, 0.0}, 0.75) == doctest::Approx(0.75).epsilon(1e-12));

    // inverse of the evaluation example
    WaterWave m{BiTrigSeries::constant(0.7), BiTrigSeries::constant(0.0)};
    CHECK(waterwave_radius(m, {0.0, 0.0}, 0.822970874674913457) ==
          doctest::Approx(1.2).epsilon(1e-12));

    // independent bisection oracle for mu > 0
    WaterWave md{BiTrigSeries::constant(1.0), BiTrigSeries::constant(0.1)};
    double lo = 0.0, hi = 4.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double f = mid * (1.0 + 0.1 * mid * mid) * std::tanh(mid) - 1.0;
        (f < 0 ? lo : hi) = mid;
    }
    CHECK(waterwave_radius(md, {0.0, 0.0}, 1.0) == doctest::Approx(0.5 * (lo + hi)).epsilon(1e-12));

    // monotonicity of E -> r(x, E)
    double prev = 0.0;
    for (double E = 0.2; E < 2.0; E += 0.2) {
        const double r = waterwave_radius(md, {1.0, 2.0}, E);
        CHECK(r > prev);
        prev = r;
    }
}

TEST_CASE("depth_to_metric definition identity and closed forms") {
    GridSpec grid{8, 8};
    WaterWave deep{BiTrigSeries::constant(1000.0), BiTrigSeries::constant(0.0)};
    auto g = depth_to_metric(deep, 2.0, grid);
    for (double v : g) CHECK(v == doctest::Approx(0.25).epsilon(1e-10));

    WaterWave m{BiTrigSeries::constant(0.7), BiTrigSeries::constant(0.0)};
    auto g2 = depth_to_metric(m, 0.822970874674913457, grid);
    for (double v : g2) CHECK(v == doctest::Approx(1.0 / 1.44).epsilon(1e-10));

    // g(x,E) * r(x,E)^2 = 1 on the grid by construction
    WaterWave mv{BiTrigSeries::constant(0.9), BiTrigSeries::constant(0.02)};
    auto g3 = depth_to_metric(mv, 0.8, grid);
    for (int i = 0; i < grid.n1; ++i)
        for (int j = 0; j < grid.n2; ++j) {
            const double r = waterwave_radius(mv, {grid.x1(i), grid.x2(j)}, 0.8);
            CHECK(g3[i * grid.n2 + j] * r * r == doctest::Approx(1.0).epsilon(1e-12));
        }
}

TEST_CASE("metric_to_depth closed form, out-of-range, and round trip") {
    GridSpec grid{32, 32};
    const BiTrigSeries mu0 = BiTrigSeries::constant(0.0);

    // r = 1, E = 0.5: D = artanh(0.5), 30-digit value
    std::vector<double> g_unit(grid.n1 * grid.n2, 1.0);
    auto D = metric_to_depth(g_unit, mu0, 0.5, grid);
    for (double v : D) CHECK(v == doctest::Approx(0.549306144334054845).epsilon(1e-13));

    CHECK_THROWS_AS(metric_to_depth(g_unit, mu0, 1.0, grid), Error);  // tanh < 1 strictly

    // round trip depth -> metric -> depth on a smooth non-constant profile
    const int n = 32;
    std::vector<double> samples(n * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            samples[i * n + j] = 0.9 + 0.2 * std::cos(num::two_pi * i / n) +
                                 0.1 * std::sin(num::two_pi * j / n);
    BiTrigSeries depth = BiTrigSeries::fit(samples, n, n);
    WaterWave m{depth, mu0};
    const double E = 0.5;
    auto gm = depth_to_metric(m, E, grid);
    auto D2 = metric_to_depth(gm, mu0, E, grid);
    for (int i = 0; i < grid.n1; ++i)
        for (int j = 0; j < grid.n2; ++j) {
            const double want = depth(grid.x1(i), grid.x2(j));
            CHECK(std::abs(D2[i * grid.n2 + j] - want) / want < 1e-10);
        }
}

TEST_CASE("jacobi_from_mechanical precondition and flat case") {
    Mechanical free_flat;
    auto j = jacobi_from_mechanical(free_flat, 1.0);
    // V = 0, g = id, E = 1: Jacobi metric is half the flat metric
    CHECK(eval(HamiltonianModel(j), {{0.0, 0.0}, {0.6, 0.8}}) ==
          doctest::Approx(0.5).epsilon(1e-15));

    Mechanical withV = cos_potential_model();
    CHECK_NOTHROW(jacobi_from_mechanical(withV, 1.0));  // max V = 0.5 < 1
    CHECK_THROWS_AS(jacobi_from_mechanical(withV, 0.4), Error);
}

TEST_CASE("liouville twin agrees with the Jacobi metric pointwise") {
    Mechanical mech = cos_potential_model();
    const double E = 1.0;
    HamiltonianModel jac = jacobi_from_mechanical(mech, E);
    HamiltonianModel liu = liouville_twin(mech, E);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ang(0.0, num::two_pi), mom(-1.0, 1.0);
    for (int i = 0; i < 50; ++i) {
        PhasePoint pt{{ang(rng), ang(rng)}, {mom(rng), mom(rng)}};
        CHECK(eval(jac, pt) == doctest::Approx(eval(liu, pt)).epsilon(1e-13));
    }
}

TEST_CASE("model JSON round trip") {
    const char* text = R"({"variant":"liouville","u":{"cos":[1.0,0.3]},"v":{"cos":[0.0,0.2]}})";
    HamiltonianModel m = model_from_json(text);
    CHECK(eval(m, {{0.0, 0.0}, {1.0, 0.0}}) == doctest::Approx(1.0 / 1.5));
    CHECK_THROWS_AS(model_from_json("{\"variant\":\"nope\"}"), Error);
    CHECK(model_to_json(m).find("liouville") != std::string::npos);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mjspectra/errors.hpp"
#include "mjspectra/flow.hpp"
#include "mjspectra/num.hpp"

using namespace mjs;

namespace {

HamiltonianModel flat() { return Liouville{TrigSeries::constant(1.0), TrigSeries()}; }

HamiltonianModel perturbed_liouville() {
    return make_liouville(TrigSeries::harmonic_cos(0.3, 1, 1.0), TrigSeries::harmonic_cos(0.2, 1));
}

HamiltonianModel pendulum_like() {
    Mechanical m;
    m.V.fx = TrigSeries::harmonic_cos(0.3, 1);
    m.V.fy = TrigSeries::harmonic_cos(0.2, 1);
    return m;
}

}  // namespace

TEST_CASE("flat geodesics are straight lines with tiny drift") {
    auto m = flat();
    PhasePoint y0{{0.0, 0.0}, {0.6, 0.8}};
    Trajectory tr = integrate(m, y0, 10.0, 1e-12);
    CHECK(tr.stats.max_energy_drift <= 1e-10);
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const double t = tr.t[i];
        CHECK(tr.lift[i][0] == doctest::Approx(1.2 * t).epsilon(1e-9));
        CHECK(tr.lift[i][1] == doctest::Approx(1.6 * t).epsilon(1e-9));
        CHECK(tr.points[i].x[0] == doctest::Approx(num::wrap_angle(1.2 * t)).epsilon(1e-9));
    }
}

TEST_CASE("energy drift stays within the recorded budget") {
    auto m = pendulum_like();
    PhasePoint y0{{0.3, 5.9}, {1.1, 0.4}};
    Trajectory tr = integrate(m, y0, 100.0, 1e-11);
    CHECK(tr.stats.max_energy_drift <= 1e-9);
    CHECK(tr.stats.max_energy_drift <= tr.stats.drift_budget);
    for (double e : tr.energy) CHECK(std::abs(e - tr.energy[0]) <= 1e-9);
}

TEST_CASE("Katok equator orbit advances at rate 1 + alpha") {
    auto m = make_katok(0.5);
    PhasePoint y0{{0.0, 0.0}, {1.0 / 1.5, 0.0}};
    Trajectory tr = integrate(m, y0, 10.0, 1e-12);
    for (std::size_t i = 0; i < tr.size(); ++i) {
        CHECK(tr.lift[i][0] == doctest::Approx(1.5 * tr.t[i]).epsilon(1e-9));
        CHECK(std::abs(tr.points[i].x[1]) < 1e-12);
        CHECK(std::abs(tr.points[i].p[1]) < 1e-12);
    }
    // period 2*pi/1.5: position returns to the start
    const double T = num::two_pi / 1.5;
    DenseFlow dense(m, y0, 1.01 * T, 1e-12);
    const auto y = dense.state(T);
    CHECK(num::wrap_angle(y[0]) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("liouville second integral is conserved along the flow") {
    auto m = perturbed_liouville();
    PhasePoint y0{{0.7, 1.9}, {0.9, 0.35}};
    const double F0 = liouville_integral(m, y0);
    Trajectory tr = integrate(m, y0, 100.0, 1e-10);
    double worst = 0.0;
    for (std::size_t i = 0; i < tr.size(); ++i)
        worst = std::max(worst, std::abs(liouville_integral(m, tr.points[i]) - F0));
    CHECK(worst <= 1e-8);
}

TEST_CASE("time reversal for symbols even in p") {
    auto m = perturbed_liouville();
    PhasePoint y0{{0.4, 2.2}, {0.8, 0.5}};
    const double T = 8.0;
    IntegrateOptions opts;
    opts.sample_dt = 0.25;
    Trajectory fwd = integrate(m, y0, T, 1e-12, opts);
    // start from the reversed endpoint and flow forward
    PhasePoint yT = fwd.points.back();
    PhasePoint rev0{yT.x, -yT.p};
    Trajectory rev = integrate(m, rev0, T, 1e-12, opts);
    REQUIRE(rev.size() == fwd.size());
    for (std::size_t i = 0; i < rev.size(); ++i) {
        const auto& a = rev.points[i];
        const auto& b = fwd.points[fwd.size() - 1 - i];
        CHECK(std::abs(num::wrap_diff(a.x[0] - b.x[0])) <= 1e-8);
        CHECK(std::abs(num::wrap_diff(a.x[1] - b.x[1])) <= 1e-8);
        CHECK((a.p + b.p).norm() <= 1e-8);
    }
}

TEST_CASE("flat Poincare section is a rigid rotation in x1") {
    auto m = flat();
    SectionSpec sec{1, 0.0, +1};
    SectionMap sm = poincare(m, sec, {{0.0, 0.0}, {0.6, 0.8}}, 40, 1e-12);
    REQUIRE(sm.points.size() == 40);
    std::vector<double> angles;
    for (const auto& pt : sm.points) {
        CHECK(std::abs(num::wrap_diff(pt.x[1])) <= 1e-10);  // section residual
        angles.push_back(pt.x[0]);
    }
    for (std::size_t i = 1; i < angles.size(); ++i) {
        const double d = num::wrap_diff(angles[i] - angles[i - 1]);
        CHECK(num::wrap_angle(d) == doctest::Approx(num::wrap_angle(num::two_pi * 0.75))
                                        .epsilon(1e-9));
    }
    // return times equally spaced by 2*pi/1.6
    for (std::size_t i = 1; i < sm.times.size(); ++i)
        CHECK(sm.times[i] - sm.times[i - 1] == doctest::Approx(num::two_pi / 1.6).epsilon(1e-10));
}

TEST_CASE("generic Liouville torus returns land on the invariant circle") {
    auto m = perturbed_liouville();
    const double E = 1.0, c = -0.4;
    const auto& liu = std::get<Liouville>(m);
    // point on the torus: p1^2 = E u + c, p2^2 = E v - c at x = (0.5, 1.0)
    const double x1 = 0.5, x2 = 1.0;
    const double p1 = std::sqrt(E * liu.u(x1) + c);
    const double p2 = std::sqrt(E * liu.v(x2) - c);
    SectionSpec sec{1, 1.0, +1};
    SectionMap sm = poincare(m, sec, {{x1, x2}, {p1, p2}}, 60, 1e-12);
    for (const auto& pt : sm.points) {
        const double resid = pt.p[0] * pt.p[0] - (E * liu.u(pt.x[0]) + c);
        CHECK(std::abs(resid) <= 1e-8);
    }
}

TEST_CASE("Katok equator fixed point of the q1 section") {
    auto m = make_katok(0.5);
    SectionSpec sec{0, 0.0, +1};
    SectionMap sm = poincare(m, sec, {{0.0, 0.0}, {1.0 / 1.5, 0.0}}, 3, 1e-12);
    for (const auto& pt : sm.points) {
        CHECK(std::abs(pt.x[1]) <= 1e-9);
        CHECK(std::abs(pt.p[1]) <= 1e-9);
    }
}

TEST_CASE("rotation number of rigid and golden rotations") {
    std::vector<double> a(1000), g(1000);
    const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int i = 0; i < 1000; ++i) {
        a[i] = num::wrap_angle(0.3 * num::two_pi * i);
        g[i] = num::wrap_angle(golden * num::two_pi * i);
    }
    auto ra = rotation_number(a);
    CHECK(ra.value == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(rotation_number(g).value == doctest::Approx(golden).epsilon(1e-10));
    std::vector<double> tiny(20, 0.0);
    CHECK_THROWS_AS(rotation_number(tiny), Error);
}

TEST_CASE("orbit distance: identity, symmetry, separated tori") {
    auto m = perturbed_liouville();
    PhasePoint y0{{0.7, 1.9}, {0.9, 0.35}};
    IntegrateOptions opts;
    opts.sample_dt = 0.02;
    Trajectory A = integrate(m, y0, 30.0, 1e-11, opts);
    CHECK(orbit_distance(A, A) == doctest::Approx(0.0));

    PhasePoint y1{{0.7, 1.9}, {0.8, 0.55}};
    Trajectory B = integrate(m, y1, 30.0, 1e-11, opts);
    const double dab = orbit_distance(A, B);
    const double dba = orbit_distance(B, A);
    CHECK(dab == doctest::Approx(dba).epsilon(1e-12));
    CHECK(dab > 0.0);

    // triangle inequality spot check
    PhasePoint y2{{0.2, 0.9}, {1.0, 0.1}};
    Trajectory C = integrate(m, y2, 30.0, 1e-11, opts);
    CHECK(orbit_distance(A, C) <= orbit_distance(A, B) + orbit_distance(B, C) + 1e-12);

    // same model, distinct invariant tori: distance bounded below.
    // tori differ in the invariant p1^2 - E u(x1) = c by ~0.25, so the phase
    // distance cannot vanish; position projections may still overlap.
    CHECK(orbit_distance(A, B, OrbitProjection::Phase) > 0.02);
}

TEST_CASE("linearized return map of a flat closed orbit is a unit-determinant shear") {
    auto m = flat();
    SectionSpec sec{1, 0.0, +1};
    ReturnMapOptions opts;
    opts.n_compose = 4;  // p = (0.6, 0.8): orbit closes after 4 section returns
    auto lin = linearized_return_map(m, {{0.0, 0.0}, {0.6, 0.8}}, sec, opts);
    CHECK(std::abs(lin.det - 1.0) <= 1e-6);
    CHECK(lin.monodromy(0, 0) == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(lin.monodromy(1, 1) == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(std::abs(lin.monodromy(1, 0)) <= 1e-5);
    // analytic shear strength: d x1' / d p1 = 4 * 2*pi / p2^3
    CHECK(lin.monodromy(0, 1) == doctest::Approx(4.0 * num::two_pi / 0.512).epsilon(1e-4));
}

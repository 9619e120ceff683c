#include "mjspectra/models.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "mjspectra/errors.hpp"
#include "mjspectra/num.hpp"

namespace mjs {

using nlohmann::json;

namespace {

double quad_form(const Mechanical& m, const PhasePoint& pt) {
    const double g11 = m.g11(pt.x[0], pt.x[1]);
    const double g12 = m.g12(pt.x[0], pt.x[1]);
    const double g22 = m.g22(pt.x[0], pt.x[1]);
    return g11 * pt.p[0] * pt.p[0] + 2.0 * g12 * pt.p[0] * pt.p[1] + g22 * pt.p[1] * pt.p[1];
}

Eigen::Vector2d quad_form_dx(const Mechanical& m, const PhasePoint& pt) {
    const double p1 = pt.p[0], p2 = pt.p[1];
    Eigen::Vector2d out;
    out[0] = m.g11.d1(pt.x[0]) * p1 * p1 + 2.0 * m.g12.d1(pt.x[0]) * p1 * p2 +
             m.g22.d1(pt.x[0]) * p2 * p2;
    out[1] = m.g11.d2(pt.x[1]) * p1 * p1 + 2.0 * m.g12.d2(pt.x[1]) * p1 * p2 +
             m.g22.d2(pt.x[1]) * p2 * p2;
    return out;
}

// dH/dr of the dispersion relation at radius r > 0
double waterwave_dr(double r, double mu, double D) {
    const double th = std::tanh(D * r);
    const double sech2 = 1.0 - th * th;
    return (1.0 + 3.0 * mu * r * r) * th + r * (1.0 + mu * r * r) * D * sech2;
}

constexpr double kKatokPoleGuard = 1e-12;

}  // namespace

double GridSpec::x1(int i) const { return num::two_pi * i / n1; }
double GridSpec::x2(int j) const { return num::two_pi * j / n2; }

HamiltonianModel make_liouville(TrigSeries u, TrigSeries v) {
    require(u.grid_min() + v.grid_min() > 0.0, Err::Degenerate,
            "Liouville model needs u + v > 0 on the grid");
    return Liouville{std::move(u), std::move(v)};
}

HamiltonianModel make_waterwave(BiTrigSeries depth, BiTrigSeries mu) {
    require(depth.positive(), Err::Degenerate, "water-wave depth must be positive");
    require(mu.grid_min() >= 0.0, Err::Degenerate, "dispersion parameter must be nonnegative");
    return WaterWave{std::move(depth), std::move(mu)};
}

HamiltonianModel make_katok(double alpha) {
    require(std::abs(alpha) < 1.0, Err::InvalidArgument, "Katok parameter needs |alpha| < 1");
    return KatokRanders{alpha};
}

void check_chart(const HamiltonianModel& model, const PhasePoint& pt) {
    if (std::holds_alternative<KatokRanders>(model)) {
        require(std::abs(pt.x[1]) < num::two_pi / 4.0, Err::ChartViolation,
                "Katok chart requires |q2| < pi/2");
    }
}

bool coordinate_wraps(const HamiltonianModel& model, int axis) {
    if (std::holds_alternative<KatokRanders>(model)) return axis == 0;
    return axis == 0 || axis == 1;
}

double eval(const HamiltonianModel& model, const PhasePoint& pt) {
    check_chart(model, pt);
    return std::visit(
        [&](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Liouville>) {
                const double denom = m.u(pt.x[0]) + m.v(pt.x[1]);
                require(denom > 0.0, Err::Degenerate, "Liouville denominator <= 0");
                return pt.p.squaredNorm() / denom;
            } else if constexpr (std::is_same_v<T, Mechanical>) {
                return 0.5 * quad_form(m, pt) + m.V(pt.x[0], pt.x[1]);
            } else if constexpr (std::is_same_v<T, JacobiMetric>) {
                const double w = 2.0 * (m.energy - m.base.V(pt.x[0], pt.x[1]));
                require(w > 0.0, Err::Degenerate, "Jacobi metric needs E > V");
                return quad_form(m.base, pt) / w;
            } else if constexpr (std::is_same_v<T, WaterWave>) {
                const double r = pt.p.norm();
                const double mu = m.mu(pt.x[0], pt.x[1]);
                const double D = m.depth(pt.x[0], pt.x[1]);
                return r * (1.0 + mu * r * r) * std::tanh(D * r);
            } else {
                const double c = std::cos(pt.x[1]);
                const double lam = std::sqrt(pt.p[1] * pt.p[1] + pt.p[0] * pt.p[0] / (c * c));
                return lam + m.katok_alpha * pt.p[0];
            }
        },
        model);
}

Gradient grad(const HamiltonianModel& model, const PhasePoint& pt) {
    check_chart(model, pt);
    return std::visit(
        [&](const auto& m) -> Gradient {
            using T = std::decay_t<decltype(m)>;
            Gradient g;
            if constexpr (std::is_same_v<T, Liouville>) {
                const double denom = m.u(pt.x[0]) + m.v(pt.x[1]);
                require(denom > 0.0, Err::Degenerate, "Liouville denominator <= 0");
                const double H = pt.p.squaredNorm() / denom;
                g.dp = 2.0 * pt.p / denom;
                g.dx[0] = -H * m.u.derivative(pt.x[0]) / denom;
                g.dx[1] = -H * m.v.derivative(pt.x[1]) / denom;
            } else if constexpr (std::is_same_v<T, Mechanical>) {
                const double g11 = m.g11(pt.x[0], pt.x[1]);
                const double g12 = m.g12(pt.x[0], pt.x[1]);
                const double g22 = m.g22(pt.x[0], pt.x[1]);
                g.dp[0] = g11 * pt.p[0] + g12 * pt.p[1];
                g.dp[1] = g12 * pt.p[0] + g22 * pt.p[1];
                g.dx = 0.5 * quad_form_dx(m, pt);
                g.dx[0] += m.V.d1(pt.x[0]);
                g.dx[1] += m.V.d2(pt.x[1]);
            } else if constexpr (std::is_same_v<T, JacobiMetric>) {
                const double w = 2.0 * (m.energy - m.base.V(pt.x[0], pt.x[1]));
                require(w > 0.0, Err::Degenerate, "Jacobi metric needs E > V");
                const double g11 = m.base.g11(pt.x[0], pt.x[1]);
                const double g12 = m.base.g12(pt.x[0], pt.x[1]);
                const double g22 = m.base.g22(pt.x[0], pt.x[1]);
                const double T2 = quad_form(m.base, pt);
                g.dp[0] = 2.0 * (g11 * pt.p[0] + g12 * pt.p[1]) / w;
                g.dp[1] = 2.0 * (g12 * pt.p[0] + g22 * pt.p[1]) / w;
                const Eigen::Vector2d Tx = quad_form_dx(m.base, pt);
                const Eigen::Vector2d Vx(m.base.V.d1(pt.x[0]), m.base.V.d2(pt.x[1]));
                g.dx = (Tx + 2.0 * (T2 / w) * Vx) / w;
            } else if constexpr (std::is_same_v<T, WaterWave>) {
                const double r = pt.p.norm();
                require(r > 0.0, Err::Degenerate, "water-wave symbol gradient needs |p| > 0");
                const double mu = m.mu(pt.x[0], pt.x[1]);
                const double D = m.depth(pt.x[0], pt.x[1]);
                const double th = std::tanh(D * r);
                const double sech2 = 1.0 - th * th;
                const double dHdr = waterwave_dr(r, mu, D);
                g.dp = dHdr * pt.p / r;
                const double dHdmu = r * r * r * th;
                const double dHdD = r * r * (1.0 + mu * r * r) * sech2;
                g.dx[0] = dHdmu * m.mu.d1(pt.x[0], pt.x[1]) + dHdD * m.depth.d1(pt.x[0], pt.x[1]);
                g.dx[1] = dHdmu * m.mu.d2(pt.x[0], pt.x[1]) + dHdD * m.depth.d2(pt.x[0], pt.x[1]);
            } else {
                const double c = std::cos(pt.x[1]);
                const double lam = std::sqrt(pt.p[1] * pt.p[1] + pt.p[0] * pt.p[0] / (c * c));
                require(lam > kKatokPoleGuard, Err::Degenerate,
                        "Randers symbol gradient needs |p| > 0");
                g.dp[0] = pt.p[0] / (c * c * lam) + m.katok_alpha;
                g.dp[1] = pt.p[1] / lam;
                g.dx[0] = 0.0;
                g.dx[1] = pt.p[0] * pt.p[0] * std::sin(pt.x[1]) / (lam * c * c * c);
            }
            return g;
        },
        model);
}

double liouville_integral(const HamiltonianModel& model, const PhasePoint& pt) {
    const auto* m = std::get_if<Liouville>(&model);
    require(m != nullptr, Err::InvalidArgument, "liouville_integral needs a Liouville model");
    const double u = m->u(pt.x[0]), v = m->v(pt.x[1]);
    const double denom = u + v;
    require(denom > 0.0, Err::Degenerate, "Liouville denominator <= 0");
    return (v * pt.p[0] * pt.p[0] - u * pt.p[1] * pt.p[1]) / denom;
}

double waterwave_radius(const WaterWave& model, const Eigen::Vector2d& x, double E) {
    require(E > 0.0, Err::InvalidArgument, "waterwave_radius needs E > 0");
    const double mu = model.mu(x[0], x[1]);
    const double D = model.depth(x[0], x[1]);
    auto fdf = [&](double r) -> std::pair<double, double> {
        return {r * (1.0 + mu * r * r) * std::tanh(D * r) - E, waterwave_dr(r, mu, D)};
    };
    // The map r -> r(1+mu r^2) tanh(D r) is strictly increasing from 0 to infinity.
    auto res = num::bisect_newton(fdf, 0.0, std::max(1.0, 2.0 * E), 1e-14);
    require(std::abs(res.residual) <= 1e-12 * std::max(1.0, E), Err::NoConvergence,
            "waterwave_radius residual above 1e-12");
    return res.x;
}

std::vector<double> depth_to_metric(const WaterWave& model, double E, const GridSpec& grid) {
    std::vector<double> g(static_cast<std::size_t>(grid.n1) * grid.n2);
    for (int i = 0; i < grid.n1; ++i)
        for (int j = 0; j < grid.n2; ++j) {
            double r;
            try {
                r = waterwave_radius(model, {grid.x1(i), grid.x2(j)}, E);
            } catch (const Error& e) {
                fail(e.kind(), "depth_to_metric at node (" + std::to_string(i) + "," +
                                   std::to_string(j) + "): " + e.what());
            }
            g[static_cast<std::size_t>(i) * grid.n2 + j] = 1.0 / (r * r);
        }
    return g;
}

std::vector<double> metric_to_depth(const std::vector<double>& g, const BiTrigSeries& mu,
                                    double E, const GridSpec& grid) {
    require(static_cast<int>(g.size()) == grid.n1 * grid.n2, Err::InvalidArgument,
            "metric grid size mismatch");
    std::vector<double> D(g.size());
    for (int i = 0; i < grid.n1; ++i)
        for (int j = 0; j < grid.n2; ++j) {
            const std::size_t idx = static_cast<std::size_t>(i) * grid.n2 + j;
            require(g[idx] > 0.0, Err::OutOfRange,
                    "conformal factor must be positive at node (" + std::to_string(i) + "," +
                        std::to_string(j) + ")");
            const double r = 1.0 / std::sqrt(g[idx]);
            const double m = mu(grid.x1(i), grid.x2(j));
            const double arg = E / (r * (1.0 + m * r * r));
            require(arg > 0.0 && arg < 1.0, Err::OutOfRange,
                    "no depth realizes this metric at node (" + std::to_string(i) + "," +
                        std::to_string(j) + "): artanh argument " + std::to_string(arg));
            D[idx] = std::atanh(arg) / r;
        }
    return D;
}

JacobiMetric jacobi_from_mechanical(const Mechanical& base, double E) {
    require(E > base.V.grid_max() + 1e-6, Err::EnergyTooLow,
            "Jacobi metric needs E > max V with margin 1e-6");
    return JacobiMetric{base, E};
}

Liouville liouville_twin(const Mechanical& base, double E) {
    auto is_const = [](const SeparableField& f, double value) {
        return f.fx.degree() == 0 && f.fy.degree() == 0 &&
               std::abs(f.fx.mean() + f.fy.mean() - value) < 1e-14;
    };
    require(is_const(base.g11, 1.0) && is_const(base.g22, 1.0) && is_const(base.g12, 0.0),
            Err::InvalidArgument, "Liouville twin needs the flat metric");
    require(E > base.V.grid_max() + 1e-6, Err::EnergyTooLow, "needs E > max V");
    // 2(E - V1(x1) - V2(x2)) split as u(x1) + v(x2)
    TrigSeries u = base.V.fx.scaled(-2.0).plus_constant(2.0 * E);
    TrigSeries v = base.V.fy.scaled(-2.0);
    return Liouville{std::move(u), std::move(v)};
}

// ------------------------------ JSON I/O -----------------------------------

namespace {

TrigSeries series_from_json(const json& j) {
    if (j.is_number()) return TrigSeries::constant(j.get<double>());
    std::vector<double> a, b;
    if (j.contains("cos")) a = j.at("cos").get<std::vector<double>>();
    if (j.contains("sin")) b = j.at("sin").get<std::vector<double>>();
    return TrigSeries(std::move(a), std::move(b));
}

json series_to_json(const TrigSeries& s) {
    json j;
    j["cos"] = s.cos_coeffs();
    std::vector<double> b(s.sin_coeffs().begin() + 1, s.sin_coeffs().end());
    j["sin"] = b;
    return j;
}

SeparableField field_from_json(const json& j) {
    if (j.is_number()) return SeparableField::constant(j.get<double>());
    SeparableField f;
    if (j.contains("x")) f.fx = series_from_json(j.at("x"));
    if (j.contains("y")) f.fy = series_from_json(j.at("y"));
    return f;
}

json field_to_json(const SeparableField& f) {
    return json{{"x", series_to_json(f.fx)}, {"y", series_to_json(f.fy)}};
}

BiTrigSeries bi_from_json(const json& j) {
    if (j.is_number()) return BiTrigSeries::constant(j.get<double>());
    double c0 = j.value("const", 0.0);
    // assemble on a small grid and fit; modes given as {k1,k2,re,im}
    const int n = 64;
    std::vector<double> samples(static_cast<std::size_t>(n) * n, c0);
    if (j.contains("modes")) {
        for (const auto& m : j.at("modes")) {
            const int k1 = m.at("k1").get<int>();
            const int k2 = m.at("k2").get<int>();
            const double re = m.value("re", 0.0);
            const double im = m.value("im", 0.0);
            for (int i = 0; i < n; ++i)
                for (int jj = 0; jj < n; ++jj) {
                    const double ph = num::two_pi * (k1 * i + k2 * jj) / n;
                    samples[static_cast<std::size_t>(i) * n + jj] +=
                        2.0 * (re * std::cos(ph) - im * std::sin(ph));
                }
        }
    }
    return BiTrigSeries::fit(samples, n, n);
}

Mechanical mechanical_from_json(const json& j) {
    Mechanical m;
    if (j.contains("V")) m.V = field_from_json(j.at("V"));
    if (j.contains("metric")) {
        const auto& g = j.at("metric");
        if (g.contains("g11")) m.g11 = field_from_json(g.at("g11"));
        if (g.contains("g12")) m.g12 = field_from_json(g.at("g12"));
        if (g.contains("g22")) m.g22 = field_from_json(g.at("g22"));
    }
    return m;
}

}  // namespace

HamiltonianModel model_from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const std::exception& e) {
        fail(Err::ConfigError, std::string("model JSON parse error: ") + e.what());
    }
    try {
        const std::string variant = j.at("variant").get<std::string>();
        if (variant == "liouville")
            return make_liouville(series_from_json(j.at("u")), series_from_json(j.at("v")));
        if (variant == "mechanical") return mechanical_from_json(j);
        if (variant == "jacobi")
            return jacobi_from_mechanical(mechanical_from_json(j.at("base")),
                                          j.at("energy").get<double>());
        if (variant == "waterwave")
            return make_waterwave(bi_from_json(j.at("depth")), bi_from_json(j.value("mu", json(0.0))));
        if (variant == "katok") return make_katok(j.at("alpha").get<double>());
        fail(Err::ConfigError, "unknown model variant '" + variant + "'");
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        fail(Err::ConfigError, std::string("model JSON: ") + e.what());
    }
}

std::string model_to_json(const HamiltonianModel& model) {
    json j = std::visit(
        [](const auto& m) -> json {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Liouville>) {
                return json{{"variant", "liouville"},
                            {"u", series_to_json(m.u)},
                            {"v", series_to_json(m.v)}};
            } else if constexpr (std::is_same_v<T, Mechanical>) {
                return json{{"variant", "mechanical"},
                            {"V", field_to_json(m.V)},
                            {"metric",
                             {{"g11", field_to_json(m.g11)},
                              {"g12", field_to_json(m.g12)},
                              {"g22", field_to_json(m.g22)}}}};
            } else if constexpr (std::is_same_v<T, JacobiMetric>) {
                return json{{"variant", "jacobi"},
                            {"energy", m.energy},
                            {"base", {{"V", field_to_json(m.base.V)}}}};
            } else if constexpr (std::is_same_v<T, WaterWave>) {
                return json{{"variant", "waterwave"},
                            {"degree", {m.depth.degree1(), m.depth.degree2()}}};
            } else {
                return json{{"variant", "katok"}, {"alpha", m.katok_alpha}};
            }
        },
        model);
    return j.dump();
}

}  // namespace mjs

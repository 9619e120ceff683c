#include "mjspectra/action_angle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "mjspectra/errors.hpp"
#include "mjspectra/num.hpp"

namespace mjs::aa {

namespace {

constexpr int kGrid = 4096;
constexpr double kSimpleZeroFloor = 1e-10;

TrigSeries momentum_square(const Liouville& model, double E, double c, int axis) {
    // P1 = E u + c, P2 = E v - c
    if (axis == 0) return model.u.scaled(E).plus_constant(c);
    return model.v.scaled(E).plus_constant(-c);
}

std::vector<double> simple_zeros(const TrigSeries& P) {
    std::vector<double> zeros;
    double prev = P(0.0);
    for (int j = 1; j <= kGrid; ++j) {
        const double x = num::two_pi * j / kGrid;
        const double cur = P(x);
        if ((prev < 0) != (cur < 0)) {
            double lo = num::two_pi * (j - 1) / kGrid, hi = x;
            double flo = prev;
            for (int it = 0; it < 80; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double fm = P(mid);
                if ((flo < 0) == (fm < 0)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            double z = 0.5 * (lo + hi);
            for (int it = 0; it < 4; ++it) {
                const double d = P.derivative(z);
                if (d != 0.0) z -= P(z) / d;
            }
            require(std::abs(P.derivative(z)) >= kSimpleZeroFloor, Err::Degenerate,
                    "turning point is not simple");
            zeros.push_back(num::wrap_angle(z));
        }
        prev = cur;
    }
    std::sort(zeros.begin(), zeros.end());
    return zeros;
}

TrigSeries fit_on_grid(const std::function<double(double)>& f, int n = kGrid) {
    std::vector<double> samples(n);
    for (int j = 0; j < n; ++j) samples[j] = f(num::two_pi * j / n);
    return TrigSeries::fit(samples, 1e-15);
}

}  // namespace

Separation separate(const Liouville& model, double E, double sep_const) {
    Separation out;
    for (int axis = 0; axis < 2; ++axis) {
        SeparationAxis& ax = out.axis[axis];
        ax.P = momentum_square(model, E, sep_const, axis);
        if (ax.P.grid_min() > 0.0) {
            ax.type = CycleType::Rotational;
            continue;
        }
        require(ax.P.grid_max() > 0.0, Err::EmptyTorus,
                "momentum square negative on the whole circle (axis " + std::to_string(axis) +
                    ")");
        auto zeros = simple_zeros(ax.P);
        require(zeros.size() == 2, Err::Degenerate,
                "expected a single libration well, found " + std::to_string(zeros.size()) +
                    " turning points");
        // orient so that P > 0 on (x_lo, x_hi), possibly wrapping
        double x_lo = zeros[0], x_hi = zeros[1];
        if (ax.P(0.5 * (x_lo + x_hi)) <= 0.0) {
            x_lo = zeros[1];
            x_hi = zeros[0] + num::two_pi;
        }
        ax.type = CycleType::Librational;
        ax.turning = {x_lo, x_hi};
    }
    return out;
}

// ----------------------------- Cycle ----------------------------------------

Cycle Cycle::build(const SeparationAxis& sep, const TrigSeries& weight, double axis_sign) {
    (void)axis_sign;
    Cycle cyc;
    cyc.type_ = sep.type;
    cyc.P_ = sep.P;
    cyc.turning_ = sep.turning;

    if (sep.type == CycleType::Rotational) {
        const TrigSeries& P = cyc.P_;
        auto s0 = fit_on_grid([&](double x) { return 1.0 / std::sqrt(P(x)); });
        auto tE = fit_on_grid([&](double x) { return 0.5 * weight(x) / std::sqrt(P(x)); });
        cyc.sigma_ = s0.antiderivative();
        cyc.TE_ = tE.antiderivative();
        cyc.Theta_ = num::two_pi * cyc.sigma_.slope;
        cyc.J_ = num::gauss_legendre([&](double x) { return std::sqrt(P(x)); }, 0.0, num::two_pi,
                                     128) /
                 num::two_pi;
    } else {
        const double x_lo = sep.turning[0], x_hi = sep.turning[1];
        const double mid = 0.5 * (x_lo + x_hi);
        const double hw = 0.5 * (x_hi - x_lo);
        cyc.mid_ = mid;
        cyc.half_width_ = hw;
        const TrigSeries& P = cyc.P_;
        const TrigSeries dP = P.differentiated();
        const TrigSeries d2P = dP.differentiated();
        const TrigSeries d3P = d2P.differentiated();
        const TrigSeries d4P = d3P.differentiated();

        // R(g) = P(x(g)) / ((x - x_lo)(x_hi - x)) with series Taylor division
        // near the endpoints; smooth and positive on the whole g-circle.
        auto divided = [&](double x, double z) {
            // P(x) / (x - z) where P(z) = 0
            const double t = x - z;
            if (std::abs(t) > 1e-3 * hw) return P(x) / t;
            return dP(z) + t * (0.5 * d2P(z) + t * (d3P(z) / 6.0 + t * (d4P(z) / 24.0)));
        };
        auto Rval = [&](double g) {
            const double x = mid + hw * std::sin(g);
            const double a = x - x_lo;
            const double b = x_hi - x;
            if (a <= b)
                return divided(x, x_lo) / b;
            return -divided(x, x_hi) / a;
        };
        cyc.Rhat_ = fit_on_grid(Rval);
        require(cyc.Rhat_.grid_min() > 0.0, Err::Degenerate,
                "libration factorization is not positive");
        const TrigSeries& R = cyc.Rhat_;
        auto s0 = fit_on_grid([&](double g) { return 1.0 / std::sqrt(R(g)); });
        auto tE = fit_on_grid(
            [&](double g) { return 0.5 * weight(mid + hw * std::sin(g)) / std::sqrt(R(g)); });
        cyc.sigma_ = s0.antiderivative();
        cyc.TE_ = tE.antiderivative();
        cyc.Theta_ = num::two_pi * cyc.sigma_.slope;
        // J = (1/pi) int_{x_lo}^{x_hi} sqrt(P) dx, Gauss-Legendre in g
        cyc.J_ = num::gauss_legendre(
                     [&](double g) {
                         const double cg = std::cos(g);
                         return hw * hw * cg * cg * std::sqrt(R(g));
                     },
                     -num::two_pi / 4.0, num::two_pi / 4.0, 128) /
                 (num::two_pi / 2.0);
    }
    cyc.dTE_ = num::two_pi * cyc.TE_.slope;
    cyc.dT1_ = 0.5 * num::two_pi * cyc.sigma_.slope;
    return cyc;
}

double Cycle::x_of_g(double g) const {
    if (type_ == CycleType::Rotational) return g;
    return mid_ + half_width_ * std::sin(g);
}

double Cycle::p_of_g(double g) const {
    if (type_ == CycleType::Rotational) return std::sqrt(std::max(P_(g), 0.0));
    return half_width_ * std::cos(g) * std::sqrt(std::max(Rhat_(g), 0.0));
}

double Cycle::g_of_psi(double psi) const {
    const double target = psi * Theta_ / num::two_pi;
    double g = psi;  // sigma is nearly linear
    for (int it = 0; it < 60; ++it) {
        const double f = sigma_(g) - target;
        const double d = sigma_.derivative(g);
        const double step = f / d;
        g -= step;
        if (std::abs(step) < 1e-14 * std::max(1.0, std::abs(g))) return g;
    }
    fail(Err::NoConvergence, "cycle parameter inversion failed");
}

// --------------------------- TorusChart --------------------------------------

TorusChart TorusChart::build(const Liouville& model, double E, double sep_const) {
    TorusChart chart;
    chart.E_ = E;
    chart.c_ = sep_const;
    Separation sep = separate(model, E, sep_const);
    chart.cyc_[0] = Cycle::build(sep.axis[0], model.u, +1.0);
    chart.cyc_[1] = Cycle::build(sep.axis[1], model.v, -1.0);
    chart.J_ = {chart.cyc_[0].action(), chart.cyc_[1].action()};

    // dJ_i/dE = loop(w dx / (2 p)) / 2pi, dJ_1/dc = +loop(dx / (2 p)) / 2pi,
    // dJ_2/dc = -loop(dx / (2 p)) / 2pi
    chart.N_(0, 0) = chart.cyc_[0].loop_TE() / num::two_pi;
    chart.N_(0, 1) = chart.cyc_[0].loop_T1() / num::two_pi;
    chart.N_(1, 0) = chart.cyc_[1].loop_TE() / num::two_pi;
    chart.N_(1, 1) = -chart.cyc_[1].loop_T1() / num::two_pi;
    const double det = chart.N_.determinant();
    require(std::abs(det) > 1e-12, Err::SingularJacobian, "action Jacobian is singular");
    chart.M_ = chart.N_.inverse();
    chart.omega_ = chart.M_.row(0).transpose();
    return chart;
}

Eigen::Vector2d TorusChart::omega_sigma_route() const {
    const double avgG0 = cyc_[0].loop_TE() / cyc_[0].sigma_period() +
                         cyc_[1].loop_TE() / cyc_[1].sigma_period();
    return {num::two_pi / (cyc_[0].sigma_period() * avgG0),
            num::two_pi / (cyc_[1].sigma_period() * avgG0)};
}

std::array<CycleType, 2> TorusChart::types() const {
    return {cyc_[0].type(), cyc_[1].type()};
}

std::array<int, 2> TorusChart::maslov() const {
    return {cyc_[0].type() == CycleType::Librational ? 2 : 0,
            cyc_[1].type() == CycleType::Librational ? 2 : 0};
}

PhasePoint TorusChart::point_at_g(double g1, double g2) const {
    PhasePoint pt;
    pt.x[0] = num::wrap_angle(cyc_[0].x_of_g(g1));
    pt.x[1] = num::wrap_angle(cyc_[1].x_of_g(g2));
    pt.p[0] = cyc_[0].p_of_g(g1);
    pt.p[1] = cyc_[1].p_of_g(g2);
    return pt;
}

Eigen::Vector2d TorusChart::angle_of_g(double g1, double g2) const {
    const double WE = cyc_[0].TE(g1) + cyc_[1].TE(g2);
    const double Wc = cyc_[0].T1(g1) - cyc_[1].T1(g2);
    Eigen::Vector2d phi;
    for (int i = 0; i < 2; ++i) phi[i] = M_(0, i) * WE + M_(1, i) * Wc;
    return phi;
}

Eigen::Vector2d TorusChart::g_of_angle(const Eigen::Vector2d& phi) const {
    Eigen::Vector2d g = phi;
    for (int it = 0; it < 100; ++it) {
        const Eigen::Vector2d cur = angle_of_g(g[0], g[1]);
        Eigen::Vector2d res;
        // the angle map is the identity plus a periodic part; wrap the residual
        res[0] = num::wrap_diff(cur[0] - phi[0]);
        res[1] = num::wrap_diff(cur[1] - phi[1]);
        Eigen::Matrix2d Jac;
        const double tE1 = cyc_[0].dTE(g[0]), tE2 = cyc_[1].dTE(g[1]);
        const double t11 = cyc_[0].dT1(g[0]), t12 = cyc_[1].dT1(g[1]);
        for (int i = 0; i < 2; ++i) {
            Jac(i, 0) = M_(0, i) * tE1 + M_(1, i) * t11;
            Jac(i, 1) = M_(0, i) * tE2 - M_(1, i) * t12;
        }
        const Eigen::Vector2d step = Jac.partialPivLu().solve(res);
        g -= step;
        if (step.norm() < 1e-13) return g;
    }
    fail(Err::NoConvergence, "angle chart inversion failed");
}

PhasePoint TorusChart::point_at_angle(const Eigen::Vector2d& phi) const {
    const Eigen::Vector2d g = g_of_angle(phi);
    return point_at_g(g[0], g[1]);
}

// ------------------------------ operations ----------------------------------

Eigen::Vector2d actions(const Liouville& model, double E, double sep_const) {
    const TorusChart chart = TorusChart::build(model, E, sep_const);
    return chart.actions();
}

Eigen::Vector2d frequencies(const Liouville& model, double E, double sep_const, double base_step) {
    const Separation center = separate(model, E, sep_const);
    const double hE = base_step * std::max(1.0, std::abs(E));
    const double hc = base_step * std::max(1.0, std::abs(sep_const));

    auto actions_checked = [&](double Ev, double cv) {
        const Separation s = separate(model, Ev, cv);
        for (int ax = 0; ax < 2; ++ax)
            require(s.axis[ax].type == center.axis[ax].type, Err::ClassificationChange,
                    "cycle classification changes inside the difference stencil");
        return actions(model, Ev, cv);
    };

    Eigen::Matrix2d N;
    N.col(0) = (actions_checked(E + hE, sep_const) - actions_checked(E - hE, sep_const)) /
               (2.0 * hE);
    N.col(1) = (actions_checked(E, sep_const + hc) - actions_checked(E, sep_const - hc)) /
               (2.0 * hc);
    const double det = N.determinant();
    require(std::abs(det) > 1e-12, Err::SingularJacobian,
            "action Jacobian determinant below 1e-12");
    return N.inverse().row(0).transpose();
}

double bordered_determinant(const Eigen::Matrix2d& domega_dJ, const Eigen::Vector2d& omega) {
    Eigen::Matrix3d B = Eigen::Matrix3d::Zero();
    B.topLeftCorner<2, 2>() = domega_dJ;
    B.topRightCorner<2, 1>() = omega;
    B.bottomLeftCorner<1, 2>() = omega.transpose();
    return B.determinant();
}

double ikam_det(const Liouville& model, double E, double sep_const, double action_step) {
    const TorusChart center = TorusChart::build(model, E, sep_const);
    const Eigen::Vector2d Ec0(E, sep_const);

    auto omega_at_J = [&](const Eigen::Vector2d& J) {
        const Eigen::Vector2d ec = invert_action_map(model, J, Ec0);
        return TorusChart::build(model, ec[0], ec[1]).omega();
    };

    const Eigen::Vector2d J0 = center.actions();
    Eigen::Matrix2d dw;
    for (int j = 0; j < 2; ++j) {
        Eigen::Vector2d Jp = J0, Jm = J0;
        const double h = action_step * std::max(1.0, std::abs(J0[j]));
        Jp[j] += h;
        Jm[j] -= h;
        dw.col(j) = (omega_at_J(Jp) - omega_at_J(Jm)) / (2.0 * h);
    }
    return bordered_determinant(dw, center.omega());
}

KamResult kam_membership(const Eigen::Vector2d& omega, const DiophantineParams& params) {
    require(omega.norm() > 0.0, Err::InvalidArgument, "frequency vector must be nonzero");
    require(params.K_max >= 8, Err::InvalidArgument, "K_max must be >= 8");
    require(params.sigma > 1.0, Err::InvalidArgument, "sigma must exceed d - 1 = 1");
    KamResult res;
    res.margin = std::numeric_limits<double>::infinity();
    for (int k1 = 0; k1 <= params.K_max; ++k1) {
        const int k2_lo = (k1 == 0) ? 1 : -params.K_max;
        for (int k2 = k2_lo; k2 <= params.K_max; ++k2) {
            if (k1 == 0 && k2 == 0) continue;
            const double small = std::abs(k1 * omega[0] + k2 * omega[1]);
            const double knorm = std::sqrt(double(k1) * k1 + double(k2) * k2);
            const double value = small * std::pow(knorm, params.sigma);
            if (value < res.margin) {
                res.margin = value;
                res.k_star = {k1, k2};
            }
        }
    }
    res.pass = res.margin >= params.dioph_c;
    return res;
}

std::array<int, 2> maslov_index(const TorusChart& chart) { return chart.maslov(); }

Eigen::Vector2d invert_action_map(const Liouville& model, const Eigen::Vector2d& J_target,
                                  Eigen::Vector2d seed_Ec, const InvertOptions& opts) {
    for (int it = 0; it < opts.max_iterations; ++it) {
        const TorusChart chart = TorusChart::build(model, seed_Ec[0], seed_Ec[1]);
        const Eigen::Vector2d resid = chart.actions() - J_target;
        if (resid.norm() <= opts.residual_tol) return seed_Ec;
        const Eigen::Matrix2d N = chart.dJ_dEc();
        require(std::abs(N.determinant()) > 1e-12, Err::SingularJacobian,
                "action Jacobian singular during inversion");
        const Eigen::Vector2d step = N.partialPivLu().solve(resid);
        seed_Ec -= step;
        if (step.norm() <= opts.step_tol) {
            const TorusChart final_chart = TorusChart::build(model, seed_Ec[0], seed_Ec[1]);
            require((final_chart.actions() - J_target).norm() <= opts.residual_tol,
                    Err::NoConvergence, "action inversion stalled above the residual tolerance");
            return seed_Ec;
        }
    }
    fail(Err::NoConvergence, "action inversion exceeded 50 iterations");
}

double find_torus_with_ratio(const Liouville& model, double E, double target_ratio, double c_lo,
                             double c_hi) {
    auto ratio = [&](double c) {
        const auto w = TorusChart::build(model, E, c).omega();
        return w[0] / w[1] - target_ratio;
    };
    double flo = ratio(c_lo), fhi = ratio(c_hi);
    require(flo * fhi <= 0, Err::OutOfRange, "frequency ratio does not bracket the target");
    for (int it = 0; it < 200 && c_hi - c_lo > 1e-14 * std::max(1.0, std::abs(c_hi)); ++it) {
        const double mid = 0.5 * (c_lo + c_hi);
        const double fm = ratio(mid);
        if ((flo < 0) == (fm < 0)) {
            c_lo = mid;
            flo = fm;
        } else {
            c_hi = mid;
        }
    }
    return 0.5 * (c_lo + c_hi);
}

}  // namespace mjs::aa

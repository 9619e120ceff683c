#pragma once

#include <Eigen/Core>
#include <array>
#include <optional>
#include <vector>

#include "mjspectra/models.hpp"

namespace mjs::aa {

enum class CycleType { Rotational, Librational };

/// One separated degree of freedom on the torus {H = E, F = c}:
/// p_i^2 = P_i(x_i) with P_1 = E u + c, P_2 = E v - c.
struct SeparationAxis {
    CycleType type;
    TrigSeries P;                  // momentum square as a function of x_i
    std::vector<double> turning;   // librational: the two simple zeros (x_lo < x_hi)
};

struct Separation {
    std::array<SeparationAxis, 2> axis;
};

/// Splits the Liouville Hamiltonian on {H=E, F=c}. Throws EmptyTorus when a
/// momentum square is negative on its whole circle, Degenerate when a turning
/// point is not simple (|dP/dx| < 1e-10) or a well is not single.
Separation separate(const Liouville& model, double E, double sep_const);

/// Spectral chart of one separated cycle, parametrized by g in [0, 2*pi):
/// rotational cycles use g = x, librational ones the substitution
/// x = mid + half_width * sin(g) which removes the square-root endpoints.
class Cycle {
public:
    static Cycle build(const SeparationAxis& sep, const TrigSeries& weight, double axis_sign);

    CycleType type() const { return type_; }
    double action() const { return J_; }
    double sigma_period() const { return Theta_; }
    double loop_TE() const { return dTE_; }   // loop integral of w dx / (2 p)
    double loop_T1() const { return dT1_; }   // loop integral of dx / (2 p)
    const std::vector<double>& turning() const { return turning_; }

    double x_of_g(double g) const;
    double p_of_g(double g) const;
    /// cumulative integrals from g = 0 along the cycle
    double sigma(double g) const { return sigma_(g); }
    double TE(double g) const { return TE_(g); }
    double T1(double g) const { return 0.5 * sigma_(g); }
    double dsigma(double g) const { return sigma_.derivative(g); }
    double dTE(double g) const { return TE_.derivative(g); }
    double dT1(double g) const { return 0.5 * sigma_.derivative(g); }
    /// invert psi = 2*pi * sigma(g) / Theta
    double g_of_psi(double psi) const;

private:
    CycleType type_;
    TrigSeries P_;
    std::vector<double> turning_;
    double mid_ = 0.0, half_width_ = 0.0;  // librational substitution data
    TrigSeries Rhat_;                      // librational: P(x(g)) / ((x-x_lo)(x_hi-x))
    TrigAntiderivative sigma_;             // d sigma = dx / p along the cycle
    TrigAntiderivative TE_;                // d TE = w dx / (2 p)
    double Theta_ = 0.0;
    double J_ = 0.0;
    double dTE_ = 0.0, dT1_ = 0.0;
};

/// Full torus chart: actions, frequencies, Maslov data, and the exact
/// separable angle coordinates (canonical angles of the Liouville flow).
class TorusChart {
public:
    static TorusChart build(const Liouville& model, double E, double sep_const);

    double energy() const { return E_; }
    double sep_const() const { return c_; }
    const Cycle& cycle(int i) const { return cyc_[i]; }
    Eigen::Vector2d actions() const { return J_; }
    /// frequencies from the quadrature Jacobian (spectral accuracy)
    Eigen::Vector2d omega() const { return omega_; }
    /// frequencies from the sigma-time route (independent identity), used as
    /// an internal consistency check: omega = (2*pi/Theta_i) / <G0>
    Eigen::Vector2d omega_sigma_route() const;
    Eigen::Matrix2d dJ_dEc() const { return N_; }
    Eigen::Matrix2d dEc_dJ() const { return M_; }
    std::array<CycleType, 2> types() const;
    std::array<int, 2> maslov() const;

    PhasePoint point_at_g(double g1, double g2) const;
    /// canonical angles of the point with cycle parameters (g1, g2)
    Eigen::Vector2d angle_of_g(double g1, double g2) const;
    Eigen::Vector2d g_of_angle(const Eigen::Vector2d& phi) const;
    PhasePoint point_at_angle(const Eigen::Vector2d& phi) const;

private:
    double E_ = 0.0, c_ = 0.0;
    std::array<Cycle, 2> cyc_;
    Eigen::Vector2d J_;
    Eigen::Vector2d omega_;
    Eigen::Matrix2d N_;  // dJ / d(E, c)
    Eigen::Matrix2d M_;  // d(E, c) / dJ
};

/// Actions (J1, J2): (1/2pi) * loop integral of |p_i| dx_i per basis cycle,
/// Gauss-Legendre after the square-root substitution; error <= 1e-10.
Eigen::Vector2d actions(const Liouville& model, double E, double sep_const);

/// Frequencies from the finite-difference Jacobian of the action map
/// (central differences, adapted step), cross-checked elsewhere against
/// rotation numbers. Throws SingularJacobian or ClassificationChange.
Eigen::Vector2d frequencies(const Liouville& model, double E, double sep_const,
                            double base_step = 1e-5);

/// Bordered isoenergetic-nondegeneracy determinant
///   det [ dw/dJ  w ; w^T  0 ]
/// with dw/dJ by central differences in action space.
double ikam_det(const Liouville& model, double E, double sep_const, double action_step = 1e-4);

/// The same bordered determinant for an arbitrary frequency map (test hook).
double bordered_determinant(const Eigen::Matrix2d& domega_dJ, const Eigen::Vector2d& omega);

struct DiophantineParams {
    double dioph_c = 0.01;
    double sigma = 1.5;   // requires sigma > d - 1 = 1
    int K_max = 64;       // requires K_max >= 8
};

struct KamResult {
    bool pass;
    Eigen::Vector2i k_star;  // minimizer of |<k, omega>| * |k|^sigma
    double margin;           // the minimized value; pass iff margin >= dioph_c
};

/// Exhaustive Diophantine check over 0 < |k|_inf <= K_max (|k| Euclidean in
/// the weight). Monotone in dioph_c by construction.
KamResult kam_membership(const Eigen::Vector2d& omega, const DiophantineParams& params);

/// Maslov offsets per cycle: 0 for rotational, 2 for librational.
std::array<int, 2> maslov_index(const TorusChart& chart);

struct InvertOptions {
    double step_tol = 1e-12;
    double residual_tol = 1e-10;
    int max_iterations = 50;
};

/// Newton inversion of (E, c) -> J using the exact quadrature Jacobian.
/// Internal building block; the quantizer has its own finite-difference
/// variant matching its contract.
Eigen::Vector2d invert_action_map(const Liouville& model, const Eigen::Vector2d& J_target,
                                  Eigen::Vector2d seed_Ec, const InvertOptions& opts = {});

/// Root-finds sep_const so that omega_1/omega_2 equals `target_ratio`.
double find_torus_with_ratio(const Liouville& model, double E, double target_ratio, double c_lo,
                             double c_hi);

}  // namespace mjs::aa

#pragma once

#include <Eigen/Core>
#include <string>
#include <variant>
#include <vector>

#include "mjspectra/trig.hpp"

namespace mjs {

/// Point of T*T^2 (or the equatorial chart of T*S^2 for the Randers model).
/// Positions are angles in radians; the Katok chart requires |x2| < pi/2.
struct PhasePoint {
    Eigen::Vector2d x;
    Eigen::Vector2d p;
};

struct Gradient {
    Eigen::Vector2d dx;  // dH/dx
    Eigen::Vector2d dp;  // dH/dp
};

/// H = (p1^2 + p2^2) / (u(x1) + v(x2)), u+v > 0.
struct Liouville {
    TrigSeries u;
    TrigSeries v;
};

/// H = 1/2 g^{ij} p_i p_j + V(x), metric entries and potential separable fields.
struct Mechanical {
    SeparableField g11 = SeparableField::constant(1.0);
    SeparableField g12 = SeparableField::constant(0.0);
    SeparableField g22 = SeparableField::constant(1.0);
    SeparableField V = SeparableField::constant(0.0);
};

/// H = g^{ij} p_i p_j / (2 (E - V)), the Maupertuis metric of `base` at energy E.
struct JacobiMetric {
    Mechanical base;
    double energy = 1.0;
};

/// Gravity water-wave dispersion symbol H = |p| (1 + mu(x) p^2) tanh(D(x) |p|).
struct WaterWave {
    BiTrigSeries depth;
    BiTrigSeries mu;
};

/// Randers symbol of the Katok sphere in the equatorial chart:
/// H = sqrt(p2^2 + p1^2 / cos^2 q2) + alpha p1, |alpha| < 1.
struct KatokRanders {
    double katok_alpha = 0.0;
};

using HamiltonianModel = std::variant<Liouville, Mechanical, JacobiMetric, WaterWave, KatokRanders>;

/// Construction helpers validate the model invariants (positivity grids etc.).
HamiltonianModel make_liouville(TrigSeries u, TrigSeries v);
HamiltonianModel make_waterwave(BiTrigSeries depth, BiTrigSeries mu);
HamiltonianModel make_katok(double alpha);

/// Checks chart validity of a point for the model (throws ChartViolation).
void check_chart(const HamiltonianModel& model, const PhasePoint& pt);

/// Whether position coordinate `axis` is periodic for this model's chart.
bool coordinate_wraps(const HamiltonianModel& model, int axis);

/// Symbol value at a phase point.
double eval(const HamiltonianModel& model, const PhasePoint& pt);

/// Analytic first derivatives; matches central differences to 1e-6 relative.
Gradient grad(const HamiltonianModel& model, const PhasePoint& pt);

/// Second integral F = (v p1^2 - u p2^2)/(u + v) of the Liouville flow.
double liouville_integral(const HamiltonianModel& model, const PhasePoint& pt);

/// Unique r > 0 with r (1 + mu r^2) tanh(D r) = E at position x; residual <= 1e-12.
double waterwave_radius(const WaterWave& model, const Eigen::Vector2d& x, double E);

struct GridSpec {
    int n1 = 32;
    int n2 = 32;
    double x1(int i) const;
    double x2(int j) const;
};

/// Conformal factor g(x,E) = 1/r(x,E)^2 on the grid nodes (row-major, i major).
std::vector<double> depth_to_metric(const WaterWave& model, double E, const GridSpec& grid);

/// Depth realizing a given conformal factor at energy E: D = artanh(E/(r(1+mu r^2)))/r,
/// r = 1/sqrt(g). Throws OutOfRange (with node index) when no depth works.
std::vector<double> metric_to_depth(const std::vector<double>& g, const BiTrigSeries& mu,
                                    double E, const GridSpec& grid);

/// The Maupertuis pairing of Example 1; requires E > max V + 1e-6.
JacobiMetric jacobi_from_mechanical(const Mechanical& base, double E);

/// For a flat-metric mechanical model with separable V, the Jacobi metric at
/// energy E is exactly Liouville with u = 2E - 2 V1(x1), v = -2 V2(x2).
Liouville liouville_twin(const Mechanical& base, double E);

/// Parse a model from its JSON description (schema documented in the README).
HamiltonianModel model_from_json(const std::string& json_text);
std::string model_to_json(const HamiltonianModel& model);

}  // namespace mjs

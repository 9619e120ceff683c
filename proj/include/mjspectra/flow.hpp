#pragma once

#include <Eigen/Core>
#include <array>
#include <functional>
#include <vector>

#include "mjspectra/models.hpp"
#include "mjspectra/num.hpp"

namespace mjs {

struct IntegratorStats {
    long steps = 0;
    long rejected = 0;
    double max_energy_drift = 0.0;  // max |H - H0| / max(1, |H0|)
    double drift_budget = 0.0;      // 100 * tol * T
};

/// Sampled integral curve. Positions in `points` are wrapped into [0, 2*pi)
/// on periodic axes; `lift` keeps the unwrapped positions for winding counts.
struct Trajectory {
    std::vector<double> t;
    std::vector<PhasePoint> points;
    std::vector<Eigen::Vector2d> lift;
    std::vector<double> energy;
    std::array<bool, 2> wraps{true, true};
    IntegratorStats stats;

    std::size_t size() const { return t.size(); }
};

struct IntegrateOptions {
    double max_step = 0.0;       // 0 = unlimited
    double sample_dt = 0.0;      // 0 = emit native integrator steps
    double initial_step = 0.0;   // 0 = automatic
    double katok_pole_guard = 0.05;  // abort when |q2| > pi/2 - guard
};

/// Adaptive Dormand-Prince 5(4) integration of the Hamiltonian flow over [0, T].
/// Relative energy drift stays within 100 * tol * T (recorded and enforced).
Trajectory integrate(const HamiltonianModel& model, const PhasePoint& pt0, double T, double tol,
                     const IntegrateOptions& opts = {});

/// Dense output over one integration; evaluates anywhere in [0, T].
class DenseFlow {
public:
    DenseFlow(const HamiltonianModel& model, const PhasePoint& pt0, double T, double tol,
              const IntegrateOptions& opts = {});

    Eigen::Vector4d state(double t) const;  // (x1, x2, p1, p2), positions unwrapped
    PhasePoint point(double t) const;
    double t_end() const { return t_end_; }
    const IntegratorStats& stats() const { return stats_; }

private:
    struct Segment {
        double t0, h;
        std::array<Eigen::Vector4d, 5> rcont;
    };
    std::vector<Segment> segs_;
    double t_end_ = 0.0;
    IntegratorStats stats_;
};

struct SectionSpec {
    int coord = 1;       // index into (x1, x2, p1, p2)
    double level = 0.0;
    int direction = +1;  // sign of d(coord)/dt at accepted crossings; 0 = both
};

struct SectionMap {
    SectionSpec spec;
    std::vector<PhasePoint> points;       // crossing points, positions wrapped
    std::vector<double> times;            // crossing times
    std::vector<double> transverse_speed; // d(coord)/dt at each crossing
};

struct PoincareOptions {
    double t_max = 1e4;
    double max_step = 0.2;
    double crossing_tol = 1e-12;
};

/// Locates n_returns transversal crossings of the section by dense-output
/// root refinement; each stored point satisfies the section equation to 1e-10.
SectionMap poincare(const HamiltonianModel& model, const SectionSpec& section,
                    const PhasePoint& pt0, int n_returns, double tol,
                    const PoincareOptions& opts = {});

struct RotationNumber {
    double value;    // in [0, 1): turns advanced per iterate, mod 1
    double stderr_;  // standard error of the least-squares slope, same units
};

/// Rotation number of an ordered sequence of circle map iterates
/// (lifted with nearest-image increments, least-squares slope).
RotationNumber rotation_number(const std::vector<double>& angles);

/// Frequency (rad per unit time) of a lifted angle time series.
num::LineFit angle_rate(const std::vector<double>& t, const std::vector<double>& lifted_angle);

enum class OrbitProjection { PositionOnly, Phase };

/// Symmetric Hausdorff distance between two sampled orbits, with linear
/// interpolation along segments and periodic wrapping on position axes.
double orbit_distance(const Trajectory& a, const Trajectory& b,
                      OrbitProjection projection = OrbitProjection::PositionOnly);

struct ReturnMapLinearization {
    Eigen::Matrix2d monodromy;
    Eigen::Vector2d fixed_point;  // in-section coordinates (x_other, p_other)
    double det;
    int newton_iterations;
};

struct ReturnMapOptions {
    int n_compose = 1;       // number of section returns per map application
    double fd_step = 1e-6;
    double tol = 1e-12;      // integration tolerance
    double newton_tol = 1e-12;
    double t_max = 1e3;
};

/// Monodromy of the in-section return map about a periodic orbit; the seed is
/// refined by Newton on the return map first. det(monodromy) = 1 within 1e-6.
ReturnMapLinearization linearized_return_map(const HamiltonianModel& model, const PhasePoint& seed,
                                             const SectionSpec& section,
                                             const ReturnMapOptions& opts = {});

}  // namespace mjs

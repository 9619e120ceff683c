#pragma once

#include <complex>
#include <string>
#include <vector>

#include "mjspectra/action_angle.hpp"
#include "mjspectra/flow.hpp"
#include "mjspectra/models.hpp"

namespace mjs::mj {

struct PairEnergies {
    double level_H;   // E: level of the first Hamiltonian
    double level_HH;  // script-E: level of the second Hamiltonian
};

struct Parallelism {
    double G;       // least-squares factor with X_HH = G X_H
    double defect;  // |X_HH - G X_H| / |X_HH|
};

/// Raw parallelism data at a point; no surface gate (used by breaking scans).
Parallelism parallelism(const HamiltonianModel& model_H, const HamiltonianModel& model_HH,
                        const PhasePoint& pt);

/// Time-reparametrization factor on the shared surface. Gates: both symbol
/// values within 1e-10 of their levels (NotOnSurface), |X_H| >= 1e-10,
/// parallelism defect <= 1e-6 (NotParallel).
double time_factor(const HamiltonianModel& model_H, const HamiltonianModel& model_HH,
                   const PhasePoint& pt, const PairEnergies& energies);

struct AverageG {
    double value;
    int n1, n2;
    std::vector<double> samples;  // row-major, angle grid phi_ij
};

/// Trapezoidal average of G over the invariant torus, sampled on a uniform
/// grid in the canonical angles of the chart (spectrally accurate).
AverageG average_G(const HamiltonianModel& model_H, const HamiltonianModel& model_HH,
                   const aa::TorusChart& chart, const PairEnergies& energies, int n1, int n2);

struct ConjugacyData {
    int n1 = 0, n2 = 0;
    std::vector<double> G;  // samples on the angle grid
    double avg_G = 0.0;
    Eigen::Vector2d omega;
    int K_max = 0;
    // coefficients of f for k in [-K,K]^2 (row-major, k1 major); f_0 = 0
    std::vector<std::complex<double>> fhat;
    double residual = 0.0;  // sup |omega . grad f - rho| on the grid

    std::complex<double> coeff(int k1, int k2) const;
    double f_value(double phi1, double phi2) const;
};

struct ConjugacyOptions {
    double small_divisor_floor = 1e-12;
    double max_residual = 1e-6;
};

/// Solves the cohomological equation omega . grad f = <G>/G - 1 spectrally:
/// fhat_k = rhohat_k / (i <k, omega>) for 0 < |k|_inf <= K_max.
ConjugacyData solve_conjugacy(const std::vector<double>& G_grid, int n1, int n2,
                              const Eigen::Vector2d& omega, int K_max,
                              const ConjugacyOptions& opts = {});

/// Max over the grid of |(1 + omega . grad f) - <G>/G| (recomputed from the
/// stored coefficients; equals the cohomological residual by construction).
double verify_det_identity(const ConjugacyData& data);

/// Full Theorem-2 construction for a model pair on a chart torus:
/// 1. samples G on the chart-angle grid and solves for the chart change onto
///    the angles in which the reparametrized motion is linear,
/// 2. resamples G on that uniform grid (fresh model evaluations through the
///    inverted chart change),
/// 3. solves the cohomological equation there (solve_conjugacy).
/// On the resampled grid the harmonic mean of G equals the arithmetic mean of
/// G over the chart angles (the frequency-rescale constant) to spectral
/// accuracy, which is asserted.
ConjugacyData build_conjugacy(const HamiltonianModel& model_H, const HamiltonianModel& model_HH,
                              const aa::TorusChart& chart, const PairEnergies& energies, int n1,
                              int n2, int K_max, const ConjugacyOptions& opts = {});

struct FrequencyRescale {
    Eigen::Vector2d omega_measured;
    Eigen::Vector2d omega_predicted;  // omega_tilde / <G>
    double rel_err;                   // |measured - predicted| / |omega_tilde|
    double avg_G;
};

struct RescaleOptions {
    double T = 400.0;
    double tol = 1e-11;
    int n1 = 128, n2 = 128;
};

/// Measures the H-flow frequencies on the torus (winding slopes of lifted
/// angle proxies) and compares them against omega_tilde / <G>.
FrequencyRescale verify_frequency_rescale(const HamiltonianModel& model_H,
                                          const HamiltonianModel& model_HH,
                                          const aa::TorusChart& chart,
                                          const PairEnergies& energies,
                                          const RescaleOptions& opts = {});

/// Frequencies of any flow restricted to the chart's torus, by winding
/// counts: rotational axes use the lifted coordinate, librational ones the
/// phase of (x - mid, p) around the cycle center.
Eigen::Vector2d measure_torus_frequencies(const HamiltonianModel& model,
                                          const aa::TorusChart& chart, const PhasePoint& pt0,
                                          double T, double tol);

struct OrbitCoincidence {
    double hausdorff;      // position-projected, over matched arc length
    double arc_length;
    double max_defect;     // worst parallelism defect along the arc
};

/// Theorem-1 style check: integrates both flows from pt0, truncates both to
/// the same position arc length, and returns the symmetric Hausdorff distance.
OrbitCoincidence orbit_coincidence(const HamiltonianModel& model_H,
                                   const HamiltonianModel& model_HH, const PhasePoint& pt0,
                                   double arc_length, double tol);

std::string conjugacy_to_json(const ConjugacyData& data);

}  // namespace mjs::mj

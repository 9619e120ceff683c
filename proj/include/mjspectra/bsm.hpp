#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "mjspectra/action_angle.hpp"
#include "mjspectra/models.hpp"

namespace mjs::bsm {

struct QuantizeParams {
    double h = 0.1;                 // semiclassical parameter, 0 < h <= 0.5
    double delta = 0.5;             // window exponent in (0, 1]
    double C0 = 1.0;                // action window constant
    std::array<int, 2> maslov{0, 0};
    Eigen::Vector2d center_actions; // I, the window center in action space
};

void validate(const QuantizeParams& params);

/// All k in Z^2 with |h k - I|_inf <= C0 h^delta, sorted lexicographically.
/// Throws WindowEmpty when no lattice point fits.
std::vector<Eigen::Vector2i> enumerate_lattice(const QuantizeParams& params);

struct InvertReport {
    Eigen::Vector2d Ec;
    double residual;
    int iterations;
};

/// Newton inversion of the action map with a central-difference Jacobian;
/// terminates at step norm <= 1e-12, requires residual <= 1e-10.
/// Throws SingularJacobian, NoConvergence (> 50 iterations), or
/// ClassificationChange when a cycle type flips during the iteration.
InvertReport invert_actions(const Liouville& model, const Eigen::Vector2d& J_prime,
                            Eigen::Vector2d seed_Ec, double fd_step = 1e-6);

enum class PointStatus { Ok, NoConvergence, SingularJacobian, ClassificationChange };

const char* status_name(PointStatus s);

struct BSMLatticePoint {
    Eigen::Vector2i k;
    Eigen::Vector2d J_prime;   // h (k + maslov / 4)
    double energy = 0.0;       // recovered E
    double sep_const = 0.0;    // recovered c
    double E_k = 0.0;          // predicted eigenvalue (= recovered E)
    double residual = 0.0;     // |J(E, c) - J'|
    PointStatus status = PointStatus::Ok;
};

struct SpectrumPrediction {
    QuantizeParams params;
    double E_center = 0.0;
    std::vector<BSMLatticePoint> points;  // converged points sorted by E_k
    std::vector<BSMLatticePoint> failed;  // dropped points with status
    double effective_C1 = 0.0;            // max |E_k - E_center| / h^delta
};

/// Predicted eigenvalue lattice around the torus with labels (E, c) = seed.
/// Per-point failures are collected, never abort the whole prediction.
SpectrumPrediction predict_spectrum(const Liouville& model, const QuantizeParams& params,
                                    const Eigen::Vector2d& seed_Ec);

/// CSV with columns k1,k2,J1p,J2p,E,c,E_k,residual,status.
std::string prediction_to_csv(const SpectrumPrediction& pred);

}  // namespace mjs::bsm

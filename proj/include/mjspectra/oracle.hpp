#pragma once

#include <Eigen/Core>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "mjspectra/models.hpp"

namespace mjs::oracle {

/// Fourier-Galerkin discretization of -h^2 Lap psi = lambda (u + v) psi in the
/// basis e^{i(k1 x1 + k2 x2)}, |k_i| <= M: the stiffness operator is diagonal
/// with entries h^2 |k|^2 and the mass operator is the convolution by the
/// Fourier coefficients of u + v (banded, Hermitian, positive definite).
struct GalerkinProblem {
    double h = 0.1;
    int M = 8;
    std::vector<double> Adiag;
    // translation-invariant mass stencil: offsets and coefficients of u + v
    std::vector<std::pair<Eigen::Vector2i, std::complex<double>>> stencil;
    bool real_symmetric = true;

    int side() const { return 2 * M + 1; }
    int dim() const { return side() * side(); }
    int index(int k1, int k2) const { return (k1 + M) * side() + (k2 + M); }
    bool in_basis(int k1, int k2) const { return std::abs(k1) <= M && std::abs(k2) <= M; }

    std::complex<double> B_entry(const Eigen::Vector2i& k, const Eigen::Vector2i& l) const;
    int band_width() const;  // lower bandwidth of B (and A - sigma B)
};

/// Assembles the problem; requires M >= deg u + deg v + 8 and probes the
/// positive definiteness of B at a small cutoff (NotPositive on failure).
GalerkinProblem assemble(const Liouville& model, double h, int M);

struct SpectrumWindow {
    double h = 0.0;
    double delta = 0.0;
    double center = 0.0;
    double half_width = 0.0;
    std::vector<double> lambdas;  // ascending, with multiplicity
    double max_residual = 0.0;    // max |A x - lambda B x| / |B x| over pairs

    std::size_t count() const { return lambdas.size(); }
    double gap_prev(std::size_t j) const;  // lambda_j - lambda_{j-1} (inf at j = 0)
    double gap_next(std::size_t j) const;
};

struct SolveOptions {
    int dense_threshold = 4000;   // dense solve when dim <= this
    double residual_tol = 1e-8;
    int nev_per_slice = 110;
    int lanczos_max = 300;
    int max_sweeps = 14;
    std::uint64_t seed = 0x5eed;
    double delta = 0.5;           // recorded in the window
    int jobs = 1;                 // parallel slices
};

/// All generalized eigenvalues in [E - half_width, E + half_width], counted
/// with multiplicity. Dense solve below the threshold; otherwise spectrum
/// slicing with shift-invert Lanczos, each slice certified by the inertia
/// counts of the banded LDL^H factorizations at its edges.
SpectrumWindow solve_window(const GalerkinProblem& problem, double E, double half_width,
                            const SolveOptions& opts = {});

/// Dense solve that also returns eigenvectors (basis coefficients), used by
/// reversal_pairing and the small-M cross checks.
struct DenseSolution {
    SpectrumWindow window;
    Eigen::MatrixXcd vectors;  // column j pairs with window.lambdas[j]
};
DenseSolution solve_window_dense(const GalerkinProblem& problem, double E, double half_width,
                                 const SolveOptions& opts = {});

struct MatchReport {
    struct Pair {
        int predicted_index;
        int computed_index;
        double error;
    };
    std::vector<Pair> pairs;
    double max_error = 0.0;
    int unmatched_predicted = 0;
    int unmatched_computed = 0;
};

/// Greedy nearest-neighbor pairing without replacement between a predicted
/// eigenvalue list and a computed window; pairs farther than tol stay
/// unmatched.
MatchReport match_spectra(const std::vector<double>& predicted, const SpectrumWindow& computed,
                          double tol);

struct GapStats {
    double fraction;  // share of eigenvalues with a neighbor within threshold
    double threshold;
    std::vector<double> bin_edges;  // log-spaced gap histogram
    std::vector<int> counts;
    std::size_t n;
};

/// Deterministic nearest-neighbor gap statistics of a spectral window.
GapStats gap_statistics(const SpectrumWindow& window, double threshold);

/// Spectrum of the reduced operator 1/2 (h D)^2 + k1 omega1(x2) on the circle
/// (1-D Fourier discretization, all eigenvalues, ascending).
std::vector<double> larmor_spectrum(const TrigSeries& omega1, double k1, double h, int M);

struct ReversalPairing {
    std::vector<int> partner;        // index of the time-reversal partner
    std::vector<double> splitting;   // |lambda_i - lambda_partner|
    std::vector<double> overlap;     // |<Gamma psi_i, B psi_partner>|
};

/// Pairs window states with their images under Gamma: (x, xi) -> (x, -xi),
/// which acts on basis coefficients by k -> -k conjugation.
ReversalPairing reversal_pairing(const GalerkinProblem& problem, const DenseSolution& sol);

}  // namespace mjs::oracle

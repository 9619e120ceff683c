#pragma once

// Independent spectral oracle for Liouville surfaces, used only by tests.
//
// The weighted eigenproblem -h^2 Lap psi = lambda (u(x1) + v(x2)) psi
// separates: psi = f(x1) g(x2) solves it iff
//   (-h^2 d^2/dx1^2 - lambda u) f = -c f   and   (-h^2 d^2/dx2^2 - lambda v) g = c g
// for a shared constant c, i.e. iff mu_i(lambda) + nu_j(lambda) = 0 where
// mu_i, nu_j are the 1-D periodic eigenvalue curves. Each curve sum is
// strictly decreasing in lambda (d/d lambda = -<u>_f - <v>_g <= min(u+v) < 0
// ... bounded above by -(min u + min v)), so every root is simple and
// bracketed by sign changes. This route never touches the 2-D Galerkin code.

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <vector>

#include "mjspectra/models.hpp"

namespace mjs::testing {

class Separable1D {
public:
    Separable1D(const TrigSeries& w, double h, int M) : M_(M) {
        const int n = 2 * M + 1;
        const int N = w.degree();
        base_ = Eigen::MatrixXd::Zero(n, n);
        for (int m = -M; m <= M; ++m) base_(m + M, m + M) = h * h * double(m) * m;
        weight_ = Eigen::MatrixXd::Zero(n, n);
        // real even series only (cosine coefficients)
        for (int m = -M; m <= M; ++m)
            for (int d = -N; d <= N; ++d) {
                const int l = m - d;
                if (std::abs(l) > M) continue;
                const double cd = d == 0 ? w.cos_coeffs()[0] : 0.5 * w.cos_coeffs()[std::abs(d)];
                weight_(m + M, l + M) += cd;
            }
    }

    const Eigen::VectorXd& eigs(double lambda) const {
        auto it = cache_.find(lambda);
        if (it != cache_.end()) return it->second;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(base_ - lambda * weight_,
                                                          Eigen::EigenvaluesOnly);
        return cache_.emplace(lambda, es.eigenvalues()).first->second;
    }

private:
    int M_;
    Eigen::MatrixXd base_, weight_;
    mutable std::map<double, Eigen::VectorXd> cache_;
};

/// All eigenvalues of the separable problem in [lo, hi], ascending.
inline std::vector<double> separable_spectrum(const Liouville& model, double h, int M1, int M2,
                                              double lo, double hi) {
    Separable1D T1(model.u, h, M1), T2(model.v, h, M2);
    const Eigen::VectorXd mu_lo = T1.eigs(lo), mu_hi = T1.eigs(hi);
    const Eigen::VectorXd nu_lo = T2.eigs(lo), nu_hi = T2.eigs(hi);

    std::vector<double> out;
    for (int i = 0; i < mu_lo.size(); ++i) {
        for (int j = 0; j < nu_lo.size(); ++j) {
            const double Flo = mu_lo[i] + nu_lo[j];
            const double Fhi = mu_hi[i] + nu_hi[j];
            if (Flo < 0.0 || Fhi > 0.0) continue;  // no sign change: no root
            double a = lo, b = hi, Fa = Flo;
            for (int it = 0; it < 200 && b - a > 1e-13 * std::max(1.0, std::abs(b)); ++it) {
                const double mid = 0.5 * (a + b);
                const double Fm = T1.eigs(mid)[i] + T2.eigs(mid)[j];
                if ((Fa < 0) == (Fm < 0)) {
                    a = mid;
                    Fa = Fm;
                } else {
                    b = mid;
                }
            }
            out.push_back(0.5 * (a + b));
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Flat-model brute force: all h^2 (k1^2 + k2^2) in [lo, hi] with multiplicity.
inline std::vector<double> flat_spectrum(double h, double lo, double hi, int kmax) {
    std::vector<double> out;
    for (int k1 = -kmax; k1 <= kmax; ++k1)
        for (int k2 = -kmax; k2 <= kmax; ++k2) {
            const double lam = h * h * (double(k1) * k1 + double(k2) * k2);
            if (lam >= lo && lam <= hi) out.push_back(lam);
        }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace mjs::testing

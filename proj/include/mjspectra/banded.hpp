#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "mjspectra/errors.hpp"

namespace mjs::num {

inline double abs2(double x) { return x * x; }
inline double abs2(const std::complex<double>& x) { return std::norm(x); }
inline double conj_mul(double a, double b) { return a * b; }

/// Banded symmetric (Hermitian) indefinite factorization A = L D L^H without
/// pivoting, in band storage: entry (i, j) with 0 <= i - j <= bw lives at
/// band[(i - j) + j * (bw + 1)]. Gives triangular solves and the inertia
/// (Sylvester counts for spectrum slicing). Unpivoted LDL^H can break down on
/// indefinite input; a tiny pivot raises SingularJacobian and the caller
/// retries at a nudged shift.
template <class Scalar>
class BandedLDL {
public:
    BandedLDL(int n, int bw) : n_(n), bw_(bw), band_(static_cast<std::size_t>(bw + 1) * n, Scalar(0)) {}

    int n() const { return n_; }
    int bandwidth() const { return bw_; }

    Scalar& at(int i, int j) {
        // lower triangle only
        return band_[static_cast<std::size_t>(j) * (bw_ + 1) + (i - j)];
    }
    const Scalar& at(int i, int j) const {
        return band_[static_cast<std::size_t>(j) * (bw_ + 1) + (i - j)];
    }

    /// In-place right-looking factorization. After it, at(i,j) holds L(i,j)
    /// for i > j and d(j) on the diagonal.
    void factorize() {
        require(!factored_, Err::InvalidArgument, "already factorized");
        double scale = 0.0;
        for (int j = 0; j < n_; ++j) scale = std::max(scale, std::abs(diag(j)));
        const double pivot_floor = 1e-14 * std::max(scale, 1e-300);
        neg_ = 0;
        for (int j = 0; j < n_; ++j) {
            const double dj = diag(j);
            require(std::abs(dj) > pivot_floor, Err::SingularJacobian,
                    "tiny pivot in banded LDL^H at column " + std::to_string(j));
            if (dj < 0) ++neg_;
            const int imax = std::min(j + bw_, n_ - 1);
            // scale column j to get L(:, j)
            for (int i = j + 1; i <= imax; ++i) at(i, j) /= dj;
            // rank-1 update of the trailing band
            for (int c = j + 1; c <= imax; ++c) {
                const Scalar ljc_conj = conj_of(at(c, j)) * Scalar(dj);
                for (int i = c; i <= imax; ++i) at(i, c) -= at(i, j) * ljc_conj;
            }
        }
        factored_ = true;
    }

    int negative_count() const { return neg_; }

    /// Solves A x = b in place (b overwritten by x).
    void solve(Scalar* x) const {
        require(factored_, Err::InvalidArgument, "factorize first");
        // forward:  L y = b
        for (int j = 0; j < n_; ++j) {
            const Scalar xj = x[j];
            const int imax = std::min(j + bw_, n_ - 1);
            for (int i = j + 1; i <= imax; ++i) x[i] -= at(i, j) * xj;
        }
        // diagonal
        for (int j = 0; j < n_; ++j) x[j] /= Scalar(diag_value(j));
        // backward: L^H z = y
        for (int j = n_ - 1; j >= 0; --j) {
            Scalar acc = x[j];
            const int imax = std::min(j + bw_, n_ - 1);
            for (int i = j + 1; i <= imax; ++i) acc -= conj_of(at(i, j)) * x[i];
            x[j] = acc;
        }
    }

private:
    static double conj_of(double v) { return v; }
    static std::complex<double> conj_of(const std::complex<double>& v) { return std::conj(v); }

    double diag(int j) const {
        if constexpr (std::is_same_v<Scalar, double>)
            return band_[static_cast<std::size_t>(j) * (bw_ + 1)];
        else
            return band_[static_cast<std::size_t>(j) * (bw_ + 1)].real();
    }
    double diag_value(int j) const { return diag(j); }

    int n_, bw_;
    std::vector<Scalar> band_;
    int neg_ = 0;
    bool factored_ = false;
};

}  // namespace mjs::num

#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace mjs::num {

constexpr double two_pi = 6.283185307179586476925286766559;

/// Wrap an angle into [0, 2*pi).
double wrap_angle(double x);

/// Wrap a difference into (-pi, pi].
double wrap_diff(double d);

/// In-place radix-2 complex FFT; n must be a power of two.
/// sign = -1: forward (sum f_j e^{-i k x_j}), sign = +1: inverse (unscaled).
void fft_pow2(std::vector<std::complex<double>>& a, int sign);

/// Forward DFT coefficients c_k = (1/n) sum_j f_j e^{-2*pi*i*j*k/n}, k = 0..n-1.
std::vector<std::complex<double>> dft_coeffs(const std::vector<double>& samples);

/// Fixed-order Gauss-Legendre quadrature of f over [a, b].
double gauss_legendre(const std::function<double(double)>& f, double a, double b, int order = 128);

/// Scalar root bracketing + bisection + Newton polish.
/// fdf returns (f, f'). Expands the bracket geometrically from [lo, hi] if needed.
struct RootResult {
    double x;
    double residual;
    int iterations;
};
RootResult bisect_newton(const std::function<std::pair<double, double>(double)>& fdf, double lo,
                         double hi, double xtol = 1e-12, int max_bisect = 200);

/// FNV-1a 64-bit hash (stable across runs; used for config provenance).
std::uint64_t fnv1a(const std::string& data);
std::string fnv1a_hex(const std::string& data);

/// Least-squares slope of y against x; returns {slope, intercept, slope_stderr}.
struct LineFit {
    double slope;
    double intercept;
    double slope_stderr;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace mjs::num

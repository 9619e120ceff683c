#pragma once

#include <complex>
#include <vector>

namespace mjs {

struct TrigAntiderivative;

/// Real trigonometric polynomial on the circle of period 2*pi:
///   f(x) = a[0] + sum_{m=1..N} a[m] cos(m x) + b[m] sin(m x).
/// Positivity on a 4096-point grid is checked once at construction and cached.
class TrigSeries {
public:
    TrigSeries();  // identically zero
    TrigSeries(std::vector<double> cos_coeffs, std::vector<double> sin_coeffs);

    static TrigSeries constant(double c);
    /// amp * cos(m x) added onto base (convenience for test models).
    static TrigSeries harmonic_cos(double amp, int m, double base = 0.0);
    static TrigSeries harmonic_sin(double amp, int m, double base = 0.0);

    /// Fit from samples on the uniform grid x_j = 2*pi*j/n (n a power of two).
    /// Modes with |coefficient| below drop_tol * max|coefficient| are discarded.
    static TrigSeries fit(const std::vector<double>& samples, double drop_tol = 1e-14);

    double operator()(double x) const;
    double derivative(double x) const;
    double second_derivative(double x) const;

    TrigSeries differentiated() const;
    TrigSeries scaled(double s) const;
    TrigSeries plus(const TrigSeries& other) const;
    TrigSeries plus_constant(double c) const;

    int degree() const { return static_cast<int>(a_.size()) - 1; }
    double mean() const { return a_[0]; }
    const std::vector<double>& cos_coeffs() const { return a_; }
    const std::vector<double>& sin_coeffs() const { return b_; }

    double grid_min() const { return grid_min_; }
    double grid_max() const { return grid_max_; }
    bool positive() const { return positive_; }
    bool is_even() const;  // all sine coefficients zero

    /// Antiderivative F with F(x) = mean * x + zero-mean periodic part.
    TrigAntiderivative antiderivative() const;

private:
    void refresh_grid_stats();

    std::vector<double> a_;  // a_[0..N]
    std::vector<double> b_;  // b_[0] unused, b_[1..N]
    double grid_min_ = 0.0;
    double grid_max_ = 0.0;
    bool positive_ = false;
};

struct TrigAntiderivative {
    double slope;         // mean of the integrand
    TrigSeries periodic;  // zero-mean periodic part
    double operator()(double x) const { return slope * x + periodic(x); }
    double derivative(double x) const { return slope + periodic.derivative(x); }
};

/// f(x1, x2) = fx(x1) + fy(x2); the separable field used by mechanical models.
struct SeparableField {
    TrigSeries fx;
    TrigSeries fy;

    double operator()(double x1, double x2) const { return fx(x1) + fy(x2); }
    double d1(double x1) const { return fx.derivative(x1); }
    double d2(double x2) const { return fy.derivative(x2); }
    double grid_min() const { return fx.grid_min() + fy.grid_min(); }
    double grid_max() const { return fx.grid_max() + fy.grid_max(); }

    static SeparableField constant(double c);
};

/// Real-valued bivariate trigonometric polynomial on T^2, stored as complex
/// Fourier coefficients c_k, k in [-K1,K1]x[-K2,K2], with c_{-k} = conj(c_k).
/// Used for the water-wave depth and dispersion fields built from grids.
class BiTrigSeries {
public:
    BiTrigSeries();  // zero
    static BiTrigSeries constant(double c);

    /// Fit from samples[i*n2 + j] = f(2*pi*i/n1, 2*pi*j/n2); n1, n2 powers of two.
    /// Modes below drop_tol * max|c| are discarded (band shrunk accordingly).
    static BiTrigSeries fit(const std::vector<double>& samples, int n1, int n2,
                            double drop_tol = 1e-13);

    double operator()(double x1, double x2) const;
    double d1(double x1, double x2) const;
    double d2(double x1, double x2) const;

    int degree1() const { return K1_; }
    int degree2() const { return K2_; }
    double grid_min() const { return grid_min_; }
    bool positive() const { return grid_min_ > 0.0; }

private:
    std::complex<double> coeff(int k1, int k2) const;
    double eval_weighted(double x1, double x2, int dx1, int dx2) const;

    int K1_ = 0, K2_ = 0;
    std::vector<std::complex<double>> c_;  // (2K1+1) x (2K2+1), row-major, k1 major
    double grid_min_ = 0.0;
};

}  // namespace mjs

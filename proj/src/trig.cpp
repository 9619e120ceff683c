#include "mjspectra/trig.hpp"

#include <algorithm>
#include <cmath>

#include "mjspectra/errors.hpp"
#include "mjspectra/num.hpp"

namespace mjs {

namespace {
constexpr int kPositivityGrid = 4096;
}

TrigSeries::TrigSeries() : a_(1, 0.0), b_(1, 0.0) { refresh_grid_stats(); }

TrigSeries::TrigSeries(std::vector<double> cos_coeffs, std::vector<double> sin_coeffs) {
    if (cos_coeffs.empty()) cos_coeffs.push_back(0.0);
    const std::size_t n = std::max(cos_coeffs.size(), sin_coeffs.size() + 1);
    a_ = std::move(cos_coeffs);
    a_.resize(n, 0.0);
    b_.assign(n, 0.0);
    for (std::size_t m = 0; m < sin_coeffs.size(); ++m) b_[m + 1] = sin_coeffs[m];
    refresh_grid_stats();
}

TrigSeries TrigSeries::constant(double c) { return TrigSeries({c}, {}); }

TrigSeries TrigSeries::harmonic_cos(double amp, int m, double base) {
    std::vector<double> a(m + 1, 0.0);
    a[0] = base;
    a[m] = amp;
    return TrigSeries(std::move(a), {});
}

TrigSeries TrigSeries::harmonic_sin(double amp, int m, double base) {
    std::vector<double> b(m, 0.0);
    b[m - 1] = amp;
    return TrigSeries({base}, std::move(b));
}

TrigSeries TrigSeries::fit(const std::vector<double>& samples, double drop_tol) {
    const std::size_t n = samples.size();
    require(n >= 4 && (n & (n - 1)) == 0, Err::InvalidArgument, "fit wants a power-of-two grid");
    auto c = num::dft_coeffs(samples);
    // c[m] and c[n-m] carry mode m; a_m = 2 Re c_m, b_m = -2 Im c_m
    double cmax = 0.0;
    for (auto& z : c) cmax = std::max(cmax, std::abs(z));
    const double cut = drop_tol * std::max(cmax, 1e-300);
    int deg = 0;
    const int half = static_cast<int>(n / 2);
    for (int m = 1; m < half; ++m)
        if (std::abs(c[m]) > cut) deg = m;
    std::vector<double> a(deg + 1, 0.0), b(deg > 0 ? deg : 0, 0.0);
    a[0] = c[0].real();
    for (int m = 1; m <= deg; ++m) {
        a[m] = 2.0 * c[m].real();
        b[m - 1] = -2.0 * c[m].imag();
    }
    return TrigSeries(std::move(a), std::move(b));
}

double TrigSeries::operator()(double x) const {
    const int N = degree();
    double acc = a_[0];
    if (N == 0) return acc;
    const double c1 = std::cos(x), s1 = std::sin(x);
    double cm = c1, sm = s1;
    for (int m = 1; m <= N; ++m) {
        acc += a_[m] * cm + b_[m] * sm;
        const double cn = cm * c1 - sm * s1;
        sm = sm * c1 + cm * s1;
        cm = cn;
    }
    return acc;
}

double TrigSeries::derivative(double x) const {
    const int N = degree();
    if (N == 0) return 0.0;
    const double c1 = std::cos(x), s1 = std::sin(x);
    double cm = c1, sm = s1;
    double acc = 0.0;
    for (int m = 1; m <= N; ++m) {
        acc += m * (b_[m] * cm - a_[m] * sm);
        const double cn = cm * c1 - sm * s1;
        sm = sm * c1 + cm * s1;
        cm = cn;
    }
    return acc;
}

double TrigSeries::second_derivative(double x) const {
    const int N = degree();
    if (N == 0) return 0.0;
    const double c1 = std::cos(x), s1 = std::sin(x);
    double cm = c1, sm = s1;
    double acc = 0.0;
    for (int m = 1; m <= N; ++m) {
        acc -= static_cast<double>(m) * m * (a_[m] * cm + b_[m] * sm);
        const double cn = cm * c1 - sm * s1;
        sm = sm * c1 + cm * s1;
        cm = cn;
    }
    return acc;
}

TrigSeries TrigSeries::differentiated() const {
    const int N = degree();
    std::vector<double> a(N + 1, 0.0), b(N > 0 ? N : 0, 0.0);
    for (int m = 1; m <= N; ++m) {
        a[m] = m * b_[m];
        b[m - 1] = -m * a_[m];
    }
    return TrigSeries(std::move(a), std::move(b));
}

TrigSeries TrigSeries::scaled(double s) const {
    std::vector<double> a(a_), b(b_.begin() + 1, b_.end());
    for (auto& v : a) v *= s;
    for (auto& v : b) v *= s;
    return TrigSeries(std::move(a), std::move(b));
}

TrigSeries TrigSeries::plus(const TrigSeries& other) const {
    const int N = std::max(degree(), other.degree());
    std::vector<double> a(N + 1, 0.0), b(N > 0 ? N : 0, 0.0);
    for (int m = 0; m <= degree(); ++m) a[m] += a_[m];
    for (int m = 0; m <= other.degree(); ++m) a[m] += other.a_[m];
    for (int m = 1; m <= degree(); ++m) b[m - 1] += b_[m];
    for (int m = 1; m <= other.degree(); ++m) b[m - 1] += other.b_[m];
    return TrigSeries(std::move(a), std::move(b));
}

TrigSeries TrigSeries::plus_constant(double c) const {
    std::vector<double> a(a_), b(b_.begin() + 1, b_.end());
    a[0] += c;
    return TrigSeries(std::move(a), std::move(b));
}

bool TrigSeries::is_even() const {
    for (double v : b_)
        if (v != 0.0) return false;
    return true;
}

TrigAntiderivative TrigSeries::antiderivative() const {
    const int N = degree();
    // integral of a_m cos(mx) + b_m sin(mx) is a_m sin(mx)/m - b_m cos(mx)/m
    std::vector<double> a(N + 1, 0.0), b(N > 0 ? N : 0, 0.0);
    for (int m = 1; m <= N; ++m) {
        a[m] = -b_[m] / m;
        b[m - 1] = a_[m] / m;
    }
    return TrigAntiderivative{a_[0], TrigSeries(std::move(a), std::move(b))};
}

void TrigSeries::refresh_grid_stats() {
    double lo = (*this)(0.0), hi = lo;
    for (int j = 1; j < kPositivityGrid; ++j) {
        const double v = (*this)(num::two_pi * j / kPositivityGrid);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    grid_min_ = lo;
    grid_max_ = hi;
    positive_ = lo > 0.0;
}

SeparableField SeparableField::constant(double c) {
    return SeparableField{TrigSeries::constant(c), TrigSeries()};
}

// ---------------------------------------------------------------------------

BiTrigSeries::BiTrigSeries() : c_(1, 0.0) {}

BiTrigSeries BiTrigSeries::constant(double c) {
    BiTrigSeries f;
    f.c_[0] = c;
    f.grid_min_ = c;
    return f;
}

std::complex<double> BiTrigSeries::coeff(int k1, int k2) const {
    return c_[static_cast<std::size_t>(k1 + K1_) * (2 * K2_ + 1) + (k2 + K2_)];
}

BiTrigSeries BiTrigSeries::fit(const std::vector<double>& samples, int n1, int n2,
                               double drop_tol) {
    require(static_cast<int>(samples.size()) == n1 * n2, Err::InvalidArgument,
            "sample count mismatch");
    // 2-D FFT: rows then columns
    std::vector<std::complex<double>> grid(samples.begin(), samples.end());
    std::vector<std::complex<double>> tmp;
    for (int i = 0; i < n1; ++i) {
        tmp.assign(grid.begin() + static_cast<std::size_t>(i) * n2,
                   grid.begin() + static_cast<std::size_t>(i + 1) * n2);
        num::fft_pow2(tmp, -1);
        std::copy(tmp.begin(), tmp.end(), grid.begin() + static_cast<std::size_t>(i) * n2);
    }
    tmp.resize(n1);
    for (int j = 0; j < n2; ++j) {
        for (int i = 0; i < n1; ++i) tmp[i] = grid[static_cast<std::size_t>(i) * n2 + j];
        num::fft_pow2(tmp, -1);
        for (int i = 0; i < n1; ++i) grid[static_cast<std::size_t>(i) * n2 + j] = tmp[i];
    }
    const double inv = 1.0 / (static_cast<double>(n1) * n2);
    double cmax = 0.0;
    for (auto& z : grid) {
        z *= inv;
        cmax = std::max(cmax, std::abs(z));
    }
    const double cut = drop_tol * std::max(cmax, 1e-300);
    auto mode = [&](int i, int n) { return i <= n / 2 ? i : i - n; };
    int K1 = 0, K2 = 0;
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j)
            if (std::abs(grid[static_cast<std::size_t>(i) * n2 + j]) > cut) {
                K1 = std::max(K1, std::abs(mode(i, n1)));
                K2 = std::max(K2, std::abs(mode(j, n2)));
            }
    require(2 * K1 + 1 <= n1 && 2 * K2 + 1 <= n2, Err::InvalidArgument,
            "field not resolved on the fitting grid");
    BiTrigSeries f;
    f.K1_ = K1;
    f.K2_ = K2;
    f.c_.assign(static_cast<std::size_t>(2 * K1 + 1) * (2 * K2 + 1), 0.0);
    for (int i = 0; i < n1; ++i) {
        const int k1 = mode(i, n1);
        if (std::abs(k1) > K1) continue;
        for (int j = 0; j < n2; ++j) {
            const int k2 = mode(j, n2);
            if (std::abs(k2) > K2) continue;
            f.c_[static_cast<std::size_t>(k1 + K1) * (2 * K2 + 1) + (k2 + K2)] =
                grid[static_cast<std::size_t>(i) * n2 + j];
        }
    }
    // positivity probe on the original samples
    f.grid_min_ = *std::min_element(samples.begin(), samples.end());
    return f;
}

double BiTrigSeries::eval_weighted(double x1, double x2, int dx1, int dx2) const {
    // computes Re sum c_k (i k1)^dx1 (i k2)^dx2 e^{i(k1 x1 + k2 x2)}
    std::complex<double> acc = 0.0;
    for (int k1 = -K1_; k1 <= K1_; ++k1) {
        const std::complex<double> e1 = std::polar(1.0, k1 * x1);
        for (int k2 = -K2_; k2 <= K2_; ++k2) {
            std::complex<double> w = coeff(k1, k2) * e1 * std::polar(1.0, k2 * x2);
            for (int d = 0; d < dx1; ++d) w *= std::complex<double>(0.0, k1);
            for (int d = 0; d < dx2; ++d) w *= std::complex<double>(0.0, k2);
            acc += w;
        }
    }
    return acc.real();
}

double BiTrigSeries::operator()(double x1, double x2) const { return eval_weighted(x1, x2, 0, 0); }
double BiTrigSeries::d1(double x1, double x2) const { return eval_weighted(x1, x2, 1, 0); }
double BiTrigSeries::d2(double x1, double x2) const { return eval_weighted(x1, x2, 0, 1); }

}  // namespace mjs

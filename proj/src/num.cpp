#include "mjspectra/num.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <cstdio>

#include "mjspectra/errors.hpp"

namespace mjs::num {

double wrap_angle(double x) {
    double r = std::fmod(x, two_pi);
    if (r < 0) r += two_pi;
    return r;
}

double wrap_diff(double d) { return std::remainder(d, two_pi); }

void fft_pow2(std::vector<std::complex<double>>& a, int sign) {
    const std::size_t n = a.size();
    require((n & (n - 1)) == 0 && n > 0, Err::InvalidArgument, "fft size must be a power of two");
    // bit reversal
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = sign * two_pi / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                std::complex<double> u = a[i + k];
                std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

std::vector<std::complex<double>> dft_coeffs(const std::vector<double>& samples) {
    std::vector<std::complex<double>> a(samples.begin(), samples.end());
    fft_pow2(a, -1);
    const double inv = 1.0 / static_cast<double>(samples.size());
    for (auto& c : a) c *= inv;
    return a;
}

double gauss_legendre(const std::function<double(double)>& f, double a, double b, int order) {
    using boost::math::quadrature::gauss;
    switch (order) {
        case 30:
            return gauss<double, 30>::integrate(f, a, b);
        case 64:
            return gauss<double, 64>::integrate(f, a, b);
        case 128:
            return gauss<double, 128>::integrate(f, a, b);
        case 256:
            return gauss<double, 256>::integrate(f, a, b);
        default:
            fail(Err::InvalidArgument, "unsupported Gauss-Legendre order " + std::to_string(order));
    }
}

RootResult bisect_newton(const std::function<std::pair<double, double>(double)>& fdf, double lo,
                         double hi, double xtol, int max_bisect) {
    auto f = [&](double x) { return fdf(x).first; };
    double flo = f(lo), fhi = f(hi);
    int expand = 0;
    while (flo * fhi > 0) {
        if (++expand > 60) fail(Err::NoConvergence, "root bracket expansion exceeded bound");
        hi += (hi - lo);  // expand upward; callers bracket from below
        fhi = f(hi);
    }
    int it = 0;
    while (hi - lo > xtol && it < max_bisect) {
        const double mid = 0.5 * (lo + hi);
        const double fmid = f(mid);
        if (flo * fmid <= 0) {
            hi = mid;
            fhi = fmid;
        } else {
            lo = mid;
            flo = fmid;
        }
        ++it;
    }
    double x = 0.5 * (lo + hi);
    // Newton polish
    for (int k = 0; k < 3; ++k) {
        auto [fx, dfx] = fdf(x);
        if (dfx == 0) break;
        const double step = fx / dfx;
        const double xn = x - step;
        if (xn >= lo - (hi - lo) && xn <= hi + (hi - lo)) x = xn;
    }
    return {x, f(x), it};
}

std::uint64_t fnv1a(const std::string& data) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string fnv1a_hex(const std::string& data) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(data)));
    return buf;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size() && x.size() >= 2, Err::TooFewSamples, "fit_line needs >= 2 points");
    const std::size_t n = x.size();
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    require(sxx > 0, Err::IllConditioned, "degenerate abscissa in fit_line");
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    double ss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - intercept - slope * x[i];
        ss += r * r;
    }
    const double var = n > 2 ? ss / (static_cast<double>(n) - 2) : 0.0;
    return {slope, intercept, std::sqrt(var / sxx)};
}

}  // namespace mjs::num

namespace mjs {

const char* err_name(Err kind) {
    switch (kind) {
        case Err::ChartViolation: return "ChartViolation";
        case Err::Degenerate: return "Degenerate";
        case Err::NoConvergence: return "NoConvergence";
        case Err::OutOfRange: return "OutOfRange";
        case Err::EnergyTooLow: return "EnergyTooLow";
        case Err::EmptyTorus: return "EmptyTorus";
        case Err::SingularJacobian: return "SingularJacobian";
        case Err::ClassificationChange: return "ClassificationChange";
        case Err::SmallDivisor: return "SmallDivisor";
        case Err::ResidualTooLarge: return "ResidualTooLarge";
        case Err::NotOnSurface: return "NotOnSurface";
        case Err::NotParallel: return "NotParallel";
        case Err::NotRational: return "NotRational";
        case Err::DegenerateCritical: return "DegenerateCritical";
        case Err::StepUnderflow: return "StepUnderflow";
        case Err::NoCrossing: return "NoCrossing";
        case Err::Tangency: return "Tangency";
        case Err::NotPeriodic: return "NotPeriodic";
        case Err::IllConditioned: return "IllConditioned";
        case Err::TooFewSamples: return "TooFewSamples";
        case Err::EmptyTrajectory: return "EmptyTrajectory";
        case Err::WindowEmpty: return "WindowEmpty";
        case Err::NotPositive: return "NotPositive";
        case Err::NotConverged: return "NotConverged";
        case Err::TooFewEigenvalues: return "TooFewEigenvalues";
        case Err::NotClosed: return "NotClosed";
        case Err::ConfigError: return "ConfigError";
        case Err::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

}  // namespace mjs

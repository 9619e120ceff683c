#include "mjspectra/mj.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <nlohmann/json.hpp>

#include "mjspectra/errors.hpp"
#include "mjspectra/num.hpp"

namespace mjs::mj {

namespace {

Eigen::Vector4d hamiltonian_field(const HamiltonianModel& model, const PhasePoint& pt) {
    const Gradient g = grad(model, pt);
    return Eigen::Vector4d(g.dp[0], g.dp[1], -g.dx[0], -g.dx[1]);
}

}  // namespace

Parallelism parallelism(const HamiltonianModel& model_H, const HamiltonianModel& model_HH,
                        const PhasePoint& pt) {
    const Eigen::Vector4d XH = hamiltonian_field(model_H, pt);
    const Eigen::Vector4d XHH = hamiltonian_field(model_HH, pt);
    require(XH.norm() >= 1e-10, Err::Degenerate, "X_H vanishes at the point");
    require(XHH.norm() >= 1e-14, Err::Degenerate, "X_HH vanishes at the point");
    Parallelism out;
    out.G = XHH.dot(XH) / XH.squaredNorm();
    out.defect = (XHH - out.G * XH).norm() / XHH.norm();
    return out;
}

double time_factor(const HamiltonianModel& model_H, const HamiltonianModel& model_HH,
                   const PhasePoint& pt, const PairEnergies& energies) {
    require(std::abs(eval(model_H, pt) - energies.level_H) <= 1e-10, Err::NotOnSurface,
            "point is off the H energy surface");
    require(std::abs(eval(model_HH, pt) - energies.level_HH) <= 1e-10, Err::NotOnSurface,
            "point is off the script-H energy surface");
    const Parallelism par = parallelism(model_H, model_HH, pt);
    require(par.defect <= 1e-6, Err::NotParallel,
            "Hamiltonian fields are not parallel (defect " + std::to_string(par.defect) +
                "); the pair is not Maupertuis-Jacobi at these energies");
    return par.G;
}

AverageG average_G(const HamiltonianModel& model_H, const HamiltonianModel& model_HH,
                   const aa::TorusChart& chart, const PairEnergies& energies, int n1, int n2) {
    AverageG out;
    out.n1 = n1;
    out.n2 = n2;
    out.samples.resize(static_cast<std::size_t>(n1) * n2);
    double sum = 0.0;
    for (int i = 0; i < n1; ++i) {
        for (int j = 0; j < n2; ++j) {
            const Eigen::Vector2d phi(num::two_pi * i / n1, num::two_pi * j / n2);
            const PhasePoint pt = chart.point_at_angle(phi);
            const double G = time_factor(model_H, model_HH, pt, energies);
            out.samples[static_cast<std::size_t>(i) * n2 + j] = G;
            sum += G;
        }
    }
    out.value = sum / (static_cast<double>(n1) * n2);
    return out;
}

std::complex<double> ConjugacyData::coeff(int k1, int k2) const {
    if (std::abs(k1) > K_max || std::abs(k2) > K_max) return 0.0;
    return fhat[static_cast<std::size_t>(k1 + K_max) * (2 * K_max + 1) + (k2 + K_max)];
}

double ConjugacyData::f_value(double phi1, double phi2) const {
    std::complex<double> acc = 0.0;
    for (int k1 = -K_max; k1 <= K_max; ++k1)
        for (int k2 = -K_max; k2 <= K_max; ++k2)
            acc += coeff(k1, k2) * std::polar(1.0, k1 * phi1 + k2 * phi2);
    return acc.real();
}

ConjugacyData solve_conjugacy(const std::vector<double>& G_grid, int n1, int n2,
                              const Eigen::Vector2d& omega, int K_max,
                              const ConjugacyOptions& opts) {
    require(static_cast<int>(G_grid.size()) == n1 * n2, Err::InvalidArgument,
            "G grid size mismatch");
    require(2 * K_max + 1 <= n1 && 2 * K_max + 1 <= n2, Err::InvalidArgument,
            "grid too coarse for the requested K_max");
    ConjugacyData data;
    data.n1 = n1;
    data.n2 = n2;
    data.G = G_grid;
    data.omega = omega;
    data.K_max = K_max;

    // Integrating the cohomological equation over the torus forces
    // mean(<G>/G) = 1, i.e. <G> is the harmonic mean of the samples. On the
    // grid in the angles where the reparametrized motion is linear this is
    // the same constant that rescales the frequencies.
    double inv_sum = 0.0;
    for (double g : G_grid) {
        require(g > 0.0, Err::Degenerate, "time factor must stay positive on the torus");
        inv_sum += 1.0 / g;
    }
    data.avg_G = static_cast<double>(G_grid.size()) / inv_sum;

    // rho = <G>/G - 1 on the grid
    std::vector<std::complex<double>> rho(G_grid.size());
    for (std::size_t i = 0; i < G_grid.size(); ++i) rho[i] = data.avg_G / G_grid[i] - 1.0;

    // 2-D FFT (rows then columns)
    std::vector<std::complex<double>> tmp(n2);
    for (int i = 0; i < n1; ++i) {
        std::copy(rho.begin() + static_cast<std::size_t>(i) * n2,
                  rho.begin() + static_cast<std::size_t>(i + 1) * n2, tmp.begin());
        num::fft_pow2(tmp, -1);
        std::copy(tmp.begin(), tmp.end(), rho.begin() + static_cast<std::size_t>(i) * n2);
    }
    tmp.resize(n1);
    for (int j = 0; j < n2; ++j) {
        for (int i = 0; i < n1; ++i) tmp[i] = rho[static_cast<std::size_t>(i) * n2 + j];
        num::fft_pow2(tmp, -1);
        for (int i = 0; i < n1; ++i) rho[static_cast<std::size_t>(i) * n2 + j] = tmp[i];
    }
    const double invN = 1.0 / (static_cast<double>(n1) * n2);
    for (auto& z : rho) z *= invN;

    auto mode = [](int idx, int n) { return idx <= n / 2 ? idx : idx - n; };
    const int side = 2 * K_max + 1;
    data.fhat.assign(static_cast<std::size_t>(side) * side, 0.0);

    // residual = the part of rho outside the retained band; we zero retained
    // modes in a copy and measure the remainder on the grid
    std::vector<std::complex<double>> tail = rho;

    for (int i = 0; i < n1; ++i) {
        const int k1 = mode(i, n1);
        if (std::abs(k1) > K_max) continue;
        for (int j = 0; j < n2; ++j) {
            const int k2 = mode(j, n2);
            if (std::abs(k2) > K_max) continue;
            tail[static_cast<std::size_t>(i) * n2 + j] = 0.0;
            if (k1 == 0 && k2 == 0) continue;  // rho has zero mean up to rounding
            const double div = k1 * omega[0] + k2 * omega[1];
            require(std::abs(div) >= opts.small_divisor_floor, Err::SmallDivisor,
                    "small divisor at k = (" + std::to_string(k1) + "," + std::to_string(k2) +
                        "): |<k,omega>| = " + std::to_string(std::abs(div)));
            data.fhat[static_cast<std::size_t>(k1 + K_max) * side + (k2 + K_max)] =
                rho[static_cast<std::size_t>(i) * n2 + j] / std::complex<double>(0.0, div);
        }
    }

    // inverse FFT of the tail and sup-norm
    for (int j = 0; j < n2; ++j) {
        for (int i = 0; i < n1; ++i) tmp[i] = tail[static_cast<std::size_t>(i) * n2 + j];
        num::fft_pow2(tmp, +1);
        for (int i = 0; i < n1; ++i) tail[static_cast<std::size_t>(i) * n2 + j] = tmp[i];
    }
    tmp.resize(n2);
    double resid = 0.0;
    for (int i = 0; i < n1; ++i) {
        std::copy(tail.begin() + static_cast<std::size_t>(i) * n2,
                  tail.begin() + static_cast<std::size_t>(i + 1) * n2, tmp.begin());
        num::fft_pow2(tmp, +1);
        for (const auto& z : tmp) resid = std::max(resid, std::abs(z));
    }
    data.residual = resid;
    require(resid <= opts.max_residual, Err::ResidualTooLarge,
            "cohomological residual " + std::to_string(resid) + " exceeds " +
                std::to_string(opts.max_residual) + "; increase K_max");
    return data;
}

double verify_det_identity(const ConjugacyData& data) {
    // det dPhi/dphi = 1 + omega . grad f, evaluated from the coefficients
    double worst = 0.0;
    const int n1 = data.n1, n2 = data.n2;
    // omega . grad f has Fourier coefficients i <k,omega> fhat_k; synthesize
    // on the grid with a zero-padded inverse FFT
    std::vector<std::complex<double>> w(static_cast<std::size_t>(n1) * n2, 0.0);
    for (int k1 = -data.K_max; k1 <= data.K_max; ++k1)
        for (int k2 = -data.K_max; k2 <= data.K_max; ++k2) {
            if (k1 == 0 && k2 == 0) continue;
            const std::complex<double> c = data.coeff(k1, k2);
            const double div = k1 * data.omega[0] + k2 * data.omega[1];
            const int i = (k1 + n1) % n1;
            const int j = (k2 + n2) % n2;
            w[static_cast<std::size_t>(i) * n2 + j] = std::complex<double>(0.0, div) * c;
        }
    std::vector<std::complex<double>> tmp(n1);
    for (int j = 0; j < n2; ++j) {
        for (int i = 0; i < n1; ++i) tmp[i] = w[static_cast<std::size_t>(i) * n2 + j];
        num::fft_pow2(tmp, +1);
        for (int i = 0; i < n1; ++i) w[static_cast<std::size_t>(i) * n2 + j] = tmp[i];
    }
    tmp.resize(n2);
    for (int i = 0; i < n1; ++i) {
        std::copy(w.begin() + static_cast<std::size_t>(i) * n2,
                  w.begin() + static_cast<std::size_t>(i + 1) * n2, tmp.begin());
        num::fft_pow2(tmp, +1);
        for (int j = 0; j < n2; ++j) {
            const double det = 1.0 + tmp[j].real();
            const double target = data.avg_G / data.G[static_cast<std::size_t>(i) * n2 + j];
            worst = std::max(worst, std::abs(det - target));
        }
    }
    return worst;
}

namespace {

/// Periodic bicubic (Catmull-Rom) interpolation of a band-limited function
/// synthesized on a fine grid by a zero-padded inverse FFT.
class PaddedInterp {
public:
    PaddedInterp(const std::vector<std::complex<double>>& modes, int K, int fine) : n_(fine) {
        std::vector<std::complex<double>> grid(static_cast<std::size_t>(n_) * n_, 0.0);
        for (int k1 = -K; k1 <= K; ++k1)
            for (int k2 = -K; k2 <= K; ++k2) {
                const std::complex<double> c =
                    modes[static_cast<std::size_t>(k1 + K) * (2 * K + 1) + (k2 + K)];
                grid[static_cast<std::size_t>((k1 + n_) % n_) * n_ + ((k2 + n_) % n_)] = c;
            }
        std::vector<std::complex<double>> tmp(n_);
        for (int j = 0; j < n_; ++j) {
            for (int i = 0; i < n_; ++i) tmp[i] = grid[static_cast<std::size_t>(i) * n_ + j];
            num::fft_pow2(tmp, +1);
            for (int i = 0; i < n_; ++i) grid[static_cast<std::size_t>(i) * n_ + j] = tmp[i];
        }
        values_.resize(grid.size());
        for (int i = 0; i < n_; ++i) {
            std::copy(grid.begin() + static_cast<std::size_t>(i) * n_,
                      grid.begin() + static_cast<std::size_t>(i + 1) * n_, tmp.begin());
            num::fft_pow2(tmp, +1);
            for (int j = 0; j < n_; ++j)
                values_[static_cast<std::size_t>(i) * n_ + j] = tmp[j].real();
        }
    }

    double operator()(double x1, double x2) const {
        const double u = num::wrap_angle(x1) * n_ / num::two_pi;
        const double v = num::wrap_angle(x2) * n_ / num::two_pi;
        const int i0 = static_cast<int>(std::floor(u));
        const int j0 = static_cast<int>(std::floor(v));
        const double fu = u - i0, fv = v - j0;
        double rows[4];
        for (int di = -1; di <= 2; ++di) {
            const int i = ((i0 + di) % n_ + n_) % n_;
            double col[4];
            for (int dj = -1; dj <= 2; ++dj) {
                const int j = ((j0 + dj) % n_ + n_) % n_;
                col[dj + 1] = values_[static_cast<std::size_t>(i) * n_ + j];
            }
            rows[di + 1] = catmull(col, fv);
        }
        return catmull(rows, fu);
    }

private:
    static double catmull(const double p[4], double t) {
        return p[1] + 0.5 * t * (p[2] - p[0] +
                                 t * (2 * p[0] - 5 * p[1] + 4 * p[2] - p[3] +
                                      t * (3 * (p[1] - p[2]) + p[3] - p[0])));
    }

    int n_;
    std::vector<double> values_;
};

}  // namespace

ConjugacyData build_conjugacy(const HamiltonianModel& model_H, const HamiltonianModel& model_HH,
                              const aa::TorusChart& chart, const PairEnergies& energies, int n1,
                              int n2, int K_max, const ConjugacyOptions& opts) {
    // step 1: G on the chart-angle grid; chart change psi -> phi0 = psi + w g
    const AverageG avg = average_G(model_H, model_HH, chart, energies, n1, n2);
    const Eigen::Vector2d omega = chart.omega();
    std::vector<double> recip(avg.samples.size());
    for (std::size_t i = 0; i < avg.samples.size(); ++i) recip[i] = 1.0 / avg.samples[i];
    // solve_conjugacy on 1/G solves omega . grad g = G/<G> - 1 with the
    // arithmetic mean of G as the constant
    const ConjugacyData gdata = solve_conjugacy(recip, n1, n2, omega, K_max, opts);

    // step 2: synthesize g and its gradient on a fine grid and invert the
    // chart change on a uniform grid in the new angles
    const int side = 2 * K_max + 1;
    std::vector<std::complex<double>> g1(gdata.fhat.size()), g2(gdata.fhat.size());
    for (int k1 = -K_max; k1 <= K_max; ++k1)
        for (int k2 = -K_max; k2 <= K_max; ++k2) {
            const std::size_t idx = static_cast<std::size_t>(k1 + K_max) * side + (k2 + K_max);
            g1[idx] = std::complex<double>(0.0, k1) * gdata.fhat[idx];
            g2[idx] = std::complex<double>(0.0, k2) * gdata.fhat[idx];
        }
    const int fine = 2048;
    const PaddedInterp gI(gdata.fhat, K_max, fine);
    const PaddedInterp g1I(g1, K_max, fine);
    const PaddedInterp g2I(g2, K_max, fine);

    std::vector<double> G_new(static_cast<std::size_t>(n1) * n2);
    Eigen::Vector2d psi(0.0, 0.0);
    for (int i = 0; i < n1; ++i) {
        for (int j = 0; j < n2; ++j) {
            const Eigen::Vector2d phi0(num::two_pi * i / n1, num::two_pi * j / n2);
            psi = phi0;  // the map is the identity plus a periodic part
            bool ok = false;
            for (int it = 0; it < 50; ++it) {
                const double g = gI(psi[0], psi[1]);
                Eigen::Vector2d res = psi + omega * g - phi0;
                res[0] = num::wrap_diff(res[0]);
                res[1] = num::wrap_diff(res[1]);
                Eigen::Matrix2d J = Eigen::Matrix2d::Identity();
                const Eigen::Vector2d dg(g1I(psi[0], psi[1]), g2I(psi[0], psi[1]));
                J += omega * dg.transpose();
                const Eigen::Vector2d step = J.partialPivLu().solve(res);
                psi -= step;
                if (step.norm() < 1e-13) {
                    ok = true;
                    break;
                }
            }
            require(ok, Err::NoConvergence, "chart-change inversion failed");
            const PhasePoint pt = chart.point_at_angle(psi);
            G_new[static_cast<std::size_t>(i) * n2 + j] =
                time_factor(model_H, model_HH, pt, energies);
        }
    }

    // step 3: the cohomological solve on the resampled grid
    ConjugacyData data = solve_conjugacy(G_new, n1, n2, omega, K_max, opts);
    require(std::abs(data.avg_G - avg.value) <= 1e-7 * std::max(1.0, std::abs(avg.value)),
            Err::ResidualTooLarge,
            "chart-change inconsistency: harmonic mean " + std::to_string(data.avg_G) +
                " vs arithmetic chart mean " + std::to_string(avg.value));
    return data;
}

Eigen::Vector2d measure_torus_frequencies(const HamiltonianModel& model,
                                          const aa::TorusChart& chart, const PhasePoint& pt0,
                                          double T, double tol) {
    IntegrateOptions opts;
    opts.sample_dt = 0.05;
    const Trajectory tr = integrate(model, pt0, T, tol, opts);
    Eigen::Vector2d out;
    for (int ax = 0; ax < 2; ++ax) {
        std::vector<double> angle(tr.size());
        if (chart.cycle(ax).type() == aa::CycleType::Rotational) {
            for (std::size_t i = 0; i < tr.size(); ++i) angle[i] = tr.lift[i][ax];
        } else {
            // phase around the libration center in the (x, p) plane
            const double mid = 0.5 * (chart.cycle(ax).turning()[0] + chart.cycle(ax).turning()[1]);
            const double wid = 0.5 * (chart.cycle(ax).turning()[1] - chart.cycle(ax).turning()[0]);
            double prev = 0.0;
            for (std::size_t i = 0; i < tr.size(); ++i) {
                const double dx = num::wrap_diff(tr.points[i].x[ax] - num::wrap_angle(mid));
                const double raw = std::atan2(-tr.points[i].p[ax], dx / wid);
                angle[i] = i == 0 ? raw : angle[i - 1] + num::wrap_diff(raw - prev);
                prev = raw;
            }
        }
        // least-squares slope of the lifted angle against time; the lift is
        // already continuous for rotational axes but re-lift defensively
        std::vector<double> lifted(tr.size());
        lifted[0] = angle[0];
        for (std::size_t i = 1; i < tr.size(); ++i)
            lifted[i] = lifted[i - 1] + (angle[i] - angle[i - 1]);
        out[ax] = std::abs(num::fit_line(tr.t, lifted).slope);
    }
    return out;
}

FrequencyRescale verify_frequency_rescale(const HamiltonianModel& model_H,
                                          const HamiltonianModel& model_HH,
                                          const aa::TorusChart& chart,
                                          const PairEnergies& energies,
                                          const RescaleOptions& opts) {
    FrequencyRescale out;
    const AverageG avg = average_G(model_H, model_HH, chart, energies, opts.n1, opts.n2);
    out.avg_G = avg.value;
    out.omega_predicted = chart.omega() / avg.value;
    const PhasePoint pt0 = chart.point_at_angle({0.3, 1.7});
    out.omega_measured = measure_torus_frequencies(model_H, chart, pt0, opts.T, opts.tol);
    out.rel_err = (out.omega_measured - out.omega_predicted).norm() / chart.omega().norm();
    return out;
}

OrbitCoincidence orbit_coincidence(const HamiltonianModel& model_H,
                                   const HamiltonianModel& model_HH, const PhasePoint& pt0,
                                   double arc_length, double tol) {
    // trace both flows to the same position arc length, then compare
    auto trace_to_arc = [&](const HamiltonianModel& model) {
        Trajectory tr;
        tr.wraps = {coordinate_wraps(model, 0), coordinate_wraps(model, 1)};
        // resample densely to keep the polyline sagitta below 1e-7
        const double ds = 1e-3;
        double speed0 = hamiltonian_field(model, pt0).head<2>().norm();
        require(speed0 > 1e-12, Err::Degenerate, "zero initial velocity");
        // generous time horizon: arc / min speed, capped
        const double T = 4.0 * arc_length / std::max(speed0, 1e-3);
        const DenseFlow dense(model, pt0, T, tol);
        double arc = 0.0;
        double t = 0.0;
        Eigen::Vector2d prev = dense.state(0.0).head<2>();
        auto push = [&](double at) {
            const Eigen::Vector4d y = dense.state(at);
            PhasePoint pt{{y[0], y[1]}, {y[2], y[3]}};
            for (int ax = 0; ax < 2; ++ax)
                if (tr.wraps[ax]) pt.x[ax] = num::wrap_angle(pt.x[ax]);
            tr.t.push_back(at);
            tr.points.push_back(pt);
            tr.lift.emplace_back(y[0], y[1]);
        };
        push(0.0);
        auto speed_at = [&](double at) {
            const Eigen::Vector4d y = dense.state(at);
            return hamiltonian_field(model, PhasePoint{{y[0], y[1]}, {y[2], y[3]}})
                .head<2>()
                .norm();
        };
        double v0 = speed_at(0.0);
        while (arc < arc_length && t < dense.t_end()) {
            require(v0 > 1e-10, Err::Degenerate, "flow stalled while matching arc length");
            // true arc length accumulated by the trapezoid rule in the speed;
            // chord sums would bias the endpoint differently per parametrization
            double t_next = std::min(t + ds / v0, dense.t_end());
            double v1 = speed_at(t_next);
            double step_arc = 0.5 * (v0 + v1) * (t_next - t);
            if (arc + step_arc > arc_length) {
                // land the final sample at the requested arc length exactly
                double lo = t, hi = t_next;
                for (int it = 0; it < 60; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    const double a = 0.5 * (v0 + speed_at(mid)) * (mid - t);
                    if (arc + a > arc_length)
                        hi = mid;
                    else
                        lo = mid;
                }
                t_next = 0.5 * (lo + hi);
                v1 = speed_at(t_next);
                step_arc = 0.5 * (v0 + v1) * (t_next - t);
            }
            t = t_next;
            v0 = v1;
            arc += step_arc;
            prev = dense.state(t).head<2>();
            push(t);
        }
        require(arc >= arc_length * 0.999, Err::NoConvergence,
                "time horizon too short for the requested arc length");
        return tr;
    };

    const Trajectory trH = trace_to_arc(model_H);
    const Trajectory trHH = trace_to_arc(model_HH);

    OrbitCoincidence out;
    out.arc_length = arc_length;
    out.hausdorff = orbit_distance(trH, trHH, OrbitProjection::PositionOnly);
    double worst = 0.0;
    for (std::size_t i = 0; i < trH.size(); i += 50)
        worst = std::max(worst, parallelism(model_H, model_HH, trH.points[i]).defect);
    out.max_defect = worst;
    return out;
}

std::string conjugacy_to_json(const ConjugacyData& data) {
    nlohmann::json j;
    j["grid"] = {data.n1, data.n2};
    j["avg_G"] = data.avg_G;
    j["K_max"] = data.K_max;
    j["residual"] = data.residual;
    j["omega"] = {data.omega[0], data.omega[1]};
    nlohmann::json coeffs = nlohmann::json::array();
    for (int k1 = -data.K_max; k1 <= data.K_max; ++k1)
        for (int k2 = -data.K_max; k2 <= data.K_max; ++k2) {
            const auto c = data.coeff(k1, k2);
            if (std::abs(c) < 1e-14) continue;
            coeffs.push_back({{"k", {k1, k2}}, {"re", c.real()}, {"im", c.imag()}});
        }
    j["f_coefficients"] = coeffs;
    return j.dump(2);
}

}  // namespace mjs::mj

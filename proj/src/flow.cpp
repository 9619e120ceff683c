#include "mjspectra/flow.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "mjspectra/errors.hpp"

namespace mjs {

namespace {

using Vec4 = Eigen::Vector4d;

// Dormand-Prince 5(4) tableau
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                 e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                 e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;
// dense-output weights
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

struct DenseSeg {
    double t0, h;
    std::array<Vec4, 5> rcont;

    Vec4 eval(double t) const {
        const double th = (t - t0) / h;
        const double th1 = 1.0 - th;
        return rcont[0] +
               th * (rcont[1] + th1 * (rcont[2] + th * (rcont[3] + th1 * rcont[4])));
    }
};

class Rhs {
public:
    Rhs(const HamiltonianModel& model, double katok_guard)
        : model_(model), is_katok_(std::holds_alternative<KatokRanders>(model)),
          q2_limit_(num::two_pi / 4.0 - katok_guard) {}

    Vec4 operator()(const Vec4& y) const {
        if (is_katok_)
            require(std::abs(y[1]) <= q2_limit_, Err::ChartViolation,
                    "orbit approached the polar chart boundary");
        PhasePoint pt{{y[0], y[1]}, {y[2], y[3]}};
        const Gradient g = grad(model_, pt);
        return Vec4(g.dp[0], g.dp[1], -g.dx[0], -g.dx[1]);
    }

    double energy(const Vec4& y) const {
        return eval(model_, PhasePoint{{y[0], y[1]}, {y[2], y[3]}});
    }

private:
    const HamiltonianModel& model_;
    bool is_katok_;
    double q2_limit_;
};

// One integration pass; on_step is called with each accepted segment and the
// stage derivatives, and may stop the run by returning false.
template <class OnStep>
IntegratorStats run_dopri5(const HamiltonianModel& model, const PhasePoint& pt0, double T,
                           double tol, const IntegrateOptions& opts, OnStep&& on_step) {
    require(T > 0.0, Err::InvalidArgument, "integration span must be positive");
    require(tol >= 1e-13 && tol <= 1e-6, Err::InvalidArgument, "tol must lie in [1e-13, 1e-6]");
    check_chart(model, pt0);

    const Rhs rhs(model, opts.katok_pole_guard);
    IntegratorStats stats;
    stats.drift_budget = 100.0 * tol * T;

    Vec4 y(pt0.x[0], pt0.x[1], pt0.p[0], pt0.p[1]);
    double t = 0.0;
    const double E0 = rhs.energy(y);
    const double escale = std::max(1.0, std::abs(E0));

    Vec4 k1 = rhs(y);
    double h = opts.initial_step > 0 ? opts.initial_step
                                     : std::min({0.01, T, 0.1 / std::max(1e-6, k1.norm())});
    if (opts.max_step > 0) h = std::min(h, opts.max_step);

    bool running = true;
    while (running && t < T) {
        h = std::min(h, T - t);
        require(h > 1e-14 * std::max(1.0, std::abs(t)), Err::StepUnderflow,
                "step size underflow at t = " + std::to_string(t));
        std::array<Vec4, 7> k;
        k[0] = k1;
        Vec4 y1;
        bool stage_ok = true;
        try {
            k[1] = rhs(y + h * (a21 * k[0]));
            k[2] = rhs(y + h * (a31 * k[0] + a32 * k[1]));
            k[3] = rhs(y + h * (a41 * k[0] + a42 * k[1] + a43 * k[2]));
            k[4] = rhs(y + h * (a51 * k[0] + a52 * k[1] + a53 * k[2] + a54 * k[3]));
            k[5] = rhs(y + h * (a61 * k[0] + a62 * k[1] + a63 * k[2] + a64 * k[3] + a65 * k[4]));
            y1 = y + h * (b1 * k[0] + b3 * k[2] + b4 * k[3] + b5 * k[4] + b6 * k[5]);
            k[6] = rhs(y1);
        } catch (const Error&) {
            // chart boundary or singular symbol inside the step: retreat
            stage_ok = false;
            if (h <= 64e-14 * std::max(1.0, std::abs(t))) throw;
        }
        if (!stage_ok) {
            h *= 0.25;
            ++stats.rejected;
            continue;
        }
        const Vec4 err_vec =
            h * (e1 * k[0] + e3 * k[2] + e4 * k[3] + e5 * k[4] + e6 * k[5] + e7 * k[6]);
        double err = 0.0;
        for (int i = 0; i < 4; ++i) {
            const double sc = tol + tol * std::max(std::abs(y[i]), std::abs(y1[i]));
            const double q = err_vec[i] / sc;
            err += q * q;
        }
        err = std::sqrt(err / 4.0);
        if (err <= 1.0) {
            DenseSeg seg;
            seg.t0 = t;
            seg.h = h;
            const Vec4 ydiff = y1 - y;
            const Vec4 bspl = h * k[0] - ydiff;
            seg.rcont[0] = y;
            seg.rcont[1] = ydiff;
            seg.rcont[2] = bspl;
            seg.rcont[3] = ydiff - h * k[6] - bspl;
            seg.rcont[4] =
                h * (d1 * k[0] + d3 * k[2] + d4 * k[3] + d5 * k[4] + d6 * k[5] + d7 * k[6]);
            ++stats.steps;
            const double drift = std::abs(rhs.energy(y1) - E0) / escale;
            stats.max_energy_drift = std::max(stats.max_energy_drift, drift);
            t += h;
            y = y1;
            k1 = k[6];  // FSAL
            running = on_step(seg, y, t);
            double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
            fac = std::clamp(fac, 0.2, 5.0);
            h *= fac;
            if (opts.max_step > 0) h = std::min(h, opts.max_step);
        } else {
            ++stats.rejected;
            double fac = 0.9 * std::pow(err, -0.2);
            h *= std::clamp(fac, 0.1, 1.0);
        }
    }
    return stats;
}

PhasePoint wrap_point(const HamiltonianModel& model, const Vec4& y) {
    PhasePoint pt{{y[0], y[1]}, {y[2], y[3]}};
    for (int ax = 0; ax < 2; ++ax)
        if (coordinate_wraps(model, ax)) pt.x[ax] = num::wrap_angle(pt.x[ax]);
    return pt;
}

}  // namespace

Trajectory integrate(const HamiltonianModel& model, const PhasePoint& pt0, double T, double tol,
                     const IntegrateOptions& opts) {
    Trajectory traj;
    traj.wraps = {coordinate_wraps(model, 0), coordinate_wraps(model, 1)};

    auto push = [&](double t, const Vec4& y) {
        traj.t.push_back(t);
        traj.points.push_back(wrap_point(model, y));
        traj.lift.emplace_back(y[0], y[1]);
        traj.energy.push_back(eval(model, PhasePoint{{y[0], y[1]}, {y[2], y[3]}}));
    };

    Vec4 y0(pt0.x[0], pt0.x[1], pt0.p[0], pt0.p[1]);
    push(0.0, y0);

    double next_sample = opts.sample_dt;
    traj.stats = run_dopri5(model, pt0, T, tol, opts, [&](const DenseSeg& seg, const Vec4& y,
                                                          double t) {
        if (opts.sample_dt > 0) {
            while (next_sample <= t + 1e-15 && next_sample <= T + 1e-15) {
                push(std::min(next_sample, t), seg.eval(std::min(next_sample, t)));
                next_sample += opts.sample_dt;
            }
        } else {
            push(t, y);
        }
        return true;
    });
    return traj;
}

DenseFlow::DenseFlow(const HamiltonianModel& model, const PhasePoint& pt0, double T, double tol,
                     const IntegrateOptions& opts) {
    stats_ = run_dopri5(model, pt0, T, tol, opts, [&](const DenseSeg& seg, const Vec4&, double t) {
        segs_.push_back({seg.t0, seg.h, seg.rcont});
        t_end_ = t;
        return true;
    });
}

Eigen::Vector4d DenseFlow::state(double t) const {
    require(!segs_.empty(), Err::EmptyTrajectory, "dense flow has no segments");
    // binary search for the segment containing t
    std::size_t lo = 0, hi = segs_.size() - 1;
    while (lo < hi) {
        const std::size_t mid = (lo + hi + 1) / 2;
        if (segs_[mid].t0 <= t)
            lo = mid;
        else
            hi = mid - 1;
    }
    DenseSeg seg{segs_[lo].t0, segs_[lo].h, segs_[lo].rcont};
    return seg.eval(t);
}

PhasePoint DenseFlow::point(double t) const {
    const Vec4 y = state(t);
    return PhasePoint{{y[0], y[1]}, {y[2], y[3]}};
}

SectionMap poincare(const HamiltonianModel& model, const SectionSpec& section,
                    const PhasePoint& pt0, int n_returns, double tol,
                    const PoincareOptions& opts) {
    require(section.coord >= 0 && section.coord < 4, Err::InvalidArgument,
            "section coordinate index out of range");
    const bool wraps = section.coord < 2 && coordinate_wraps(model, section.coord);
    const Rhs rhs(model, 0.05);

    auto sval = [&](const Vec4& y) {
        const double d = y[section.coord] - section.level;
        return wraps ? num::wrap_diff(d) : d;
    };

    SectionMap out;
    out.spec = section;

    IntegrateOptions iopts;
    iopts.max_step = opts.max_step;

    auto handle_crossing = [&](const DenseSeg& seg, double ta, double tb) -> bool {
        // bisection on s(dense(t)) over [ta, tb]
        double fa = sval(seg.eval(ta));
        for (int it = 0; it < 200 && (tb - ta) > 1e-15 * std::max(1.0, std::abs(tb)); ++it) {
            const double tm = 0.5 * (ta + tb);
            const double fm = sval(seg.eval(tm));
            if (fa * fm <= 0) {
                tb = tm;
            } else {
                ta = tm;
                fa = fm;
            }
        }
        const double tc = 0.5 * (ta + tb);
        const Vec4 yc = seg.eval(tc);
        const double speed = rhs(yc)[section.coord];
        require(std::abs(speed) >= 1e-8, Err::Tangency,
                "non-transversal section crossing at t = " + std::to_string(tc));
        if (section.direction != 0 && speed * section.direction < 0) return false;
        if (tc < 1e-9) return false;  // starting point sitting on the section
        require(std::abs(sval(yc)) <= 1e-10, Err::NoConvergence,
                "section residual above 1e-10");
        out.points.push_back(wrap_point(model, yc));
        out.times.push_back(tc);
        out.transverse_speed.push_back(speed);
        return true;
    };

    run_dopri5(model, pt0, opts.t_max, tol, iopts, [&](const DenseSeg& seg, const Vec4&, double) {
        // scan the step in quarters to be safe against multiple crossings
        const int nsub = 4;
        for (int i = 0; i < nsub; ++i) {
            const double ta = seg.t0 + seg.h * i / nsub;
            const double tb = seg.t0 + seg.h * (i + 1) / nsub;
            const double fa = sval(seg.eval(ta));
            const double fb = sval(seg.eval(tb));
            // genuine sign change, not an artifact of the branch cut at +-pi
            const bool real_crossing =
                fa * fb < 0 && (!wraps || std::abs(fa) + std::abs(fb) < num::two_pi / 4.0);
            if (real_crossing) {
                if (handle_crossing(seg, ta, tb) &&
                    static_cast<int>(out.points.size()) >= n_returns)
                    return false;
            }
        }
        return true;
    });

    require(static_cast<int>(out.points.size()) >= n_returns, Err::NoCrossing,
            "found " + std::to_string(out.points.size()) + " of " + std::to_string(n_returns) +
                " section returns within the time budget");
    return out;
}

RotationNumber rotation_number(const std::vector<double>& angles) {
    require(angles.size() >= 100, Err::TooFewSamples, "rotation_number needs >= 100 samples");
    std::vector<double> idx(angles.size()), lifted(angles.size());
    lifted[0] = angles[0];
    idx[0] = 0;
    for (std::size_t i = 1; i < angles.size(); ++i) {
        lifted[i] = lifted[i - 1] + num::wrap_diff(angles[i] - angles[i - 1]);
        idx[i] = static_cast<double>(i);
    }
    const auto fit = num::fit_line(idx, lifted);
    double value = fit.slope / num::two_pi;
    value -= std::floor(value);
    return {value, fit.slope_stderr / num::two_pi};
}

num::LineFit angle_rate(const std::vector<double>& t, const std::vector<double>& lifted_angle) {
    return num::fit_line(t, lifted_angle);
}

// --------------------------- orbit distance --------------------------------

namespace {

struct CellHash {
    double cell;
    int n_cells;  // cells per axis over [0, 2*pi)
    std::unordered_map<long, std::vector<int>> buckets;

    long key(int i, int j) const {
        auto m = [&](int v) { return ((v % n_cells) + n_cells) % n_cells; };
        return static_cast<long>(m(i)) * n_cells + m(j);
    }
};

double seg_point_dist2(const Eigen::VectorXd& a, Eigen::VectorXd b0, Eigen::VectorXd b1,
                       const std::array<bool, 2>& wraps) {
    // reconnect the segment across the seam, then shift it by whole periods
    // so b0 is the nearest image of a
    for (int ax = 0; ax < 2; ++ax) {
        if (!wraps[ax]) continue;
        b1[ax] += std::round((b0[ax] - b1[ax]) / num::two_pi) * num::two_pi;
        const double shift = std::round((a[ax] - b0[ax]) / num::two_pi) * num::two_pi;
        b0[ax] += shift;
        b1[ax] += shift;
    }
    const Eigen::VectorXd d = b1 - b0;
    const double len2 = d.squaredNorm();
    double s = len2 > 0 ? (a - b0).dot(d) / len2 : 0.0;
    s = std::clamp(s, 0.0, 1.0);
    return (a - (b0 + s * d)).squaredNorm();
}

std::vector<Eigen::VectorXd> project(const Trajectory& tr, OrbitProjection proj) {
    std::vector<Eigen::VectorXd> out(tr.size());
    const int dim = proj == OrbitProjection::PositionOnly ? 2 : 4;
    for (std::size_t i = 0; i < tr.size(); ++i) {
        Eigen::VectorXd v(dim);
        v[0] = tr.points[i].x[0];
        v[1] = tr.points[i].x[1];
        if (dim == 4) {
            v[2] = tr.points[i].p[0];
            v[3] = tr.points[i].p[1];
        }
        out[i] = v;
    }
    return out;
}

double directed_hausdorff(const std::vector<Eigen::VectorXd>& A,
                          const std::vector<Eigen::VectorXd>& B,
                          const std::array<bool, 2>& wraps) {
    // hash B's points by position cell; candidate segments share those points
    CellHash hash;
    hash.n_cells = 128;
    hash.cell = num::two_pi / hash.n_cells;
    auto cell_of = [&](const Eigen::VectorXd& v, int ax) {
        return static_cast<int>(std::floor(num::wrap_angle(v[ax]) / hash.cell));
    };
    for (int j = 0; j < static_cast<int>(B.size()); ++j)
        hash.buckets[hash.key(cell_of(B[j], 0), cell_of(B[j], 1))].push_back(j);

    double worst = 0.0;
    for (const auto& a : A) {
        const int ci = cell_of(a, 0), cj = cell_of(a, 1);
        double best2 = std::numeric_limits<double>::infinity();
        for (int r = 0; r < hash.n_cells; ++r) {
            if (r > 1 && best2 < std::pow((r - 1) * hash.cell, 2)) break;
            // scan the Chebyshev ring at radius r
            for (int di = -r; di <= r; ++di)
                for (int dj = -r; dj <= r; ++dj) {
                    if (std::max(std::abs(di), std::abs(dj)) != r) continue;
                    auto it = hash.buckets.find(hash.key(ci + di, cj + dj));
                    if (it == hash.buckets.end()) continue;
                    for (int j : it->second) {
                        if (j > 0)
                            best2 = std::min(best2, seg_point_dist2(a, B[j - 1], B[j], wraps));
                        if (j + 1 < static_cast<int>(B.size()))
                            best2 = std::min(best2, seg_point_dist2(a, B[j], B[j + 1], wraps));
                        if (B.size() == 1)
                            best2 = std::min(best2, seg_point_dist2(a, B[j], B[j], wraps));
                    }
                }
            if (r > hash.n_cells / 2 && std::isfinite(best2)) break;
        }
        worst = std::max(worst, best2);
    }
    return std::sqrt(worst);
}

}  // namespace

double orbit_distance(const Trajectory& a, const Trajectory& b, OrbitProjection projection) {
    require(a.size() > 0 && b.size() > 0, Err::EmptyTrajectory, "orbit_distance on empty input");
    require(a.wraps == b.wraps, Err::InvalidArgument, "trajectories on different charts");
    const auto pa = project(a, projection);
    const auto pb = project(b, projection);
    return std::max(directed_hausdorff(pa, pb, a.wraps), directed_hausdorff(pb, pa, a.wraps));
}

// ----------------------- linearized return map ------------------------------

namespace {

double solve_momentum(const HamiltonianModel& model, PhasePoint pt, int ip, double seed,
                      double E) {
    double p = seed;
    for (int it = 0; it < 60; ++it) {
        pt.p[ip] = p;
        const double f = eval(model, pt) - E;
        if (std::abs(f) <= 1e-13 * std::max(1.0, std::abs(E))) return p;
        const double df = grad(model, pt).dp[ip];
        require(std::abs(df) > 1e-14, Err::IllConditioned, "dH/dp vanishes in momentum solve");
        p -= f / df;
    }
    fail(Err::NoConvergence, "energy-surface momentum solve failed");
}

}  // namespace

ReturnMapLinearization linearized_return_map(const HamiltonianModel& model, const PhasePoint& seed,
                                             const SectionSpec& section,
                                             const ReturnMapOptions& opts) {
    require(section.coord == 0 || section.coord == 1, Err::InvalidArgument,
            "return map needs a position section");
    const int ic = section.coord;
    const int io = 1 - ic;
    const double E = eval(model, seed);

    SectionSpec sec = section;
    {
        // fix the crossing direction from the seed velocity
        const Gradient g = grad(model, seed);
        sec.direction = g.dp[ic] > 0 ? +1 : -1;
    }

    double p_seed = seed.p[ic];
    auto lift_z = [&](const Eigen::Vector2d& z) {
        PhasePoint pt;
        pt.x[ic] = section.level;
        pt.x[io] = z[0];
        pt.p[io] = z[1];
        pt.p[ic] = 0.0;
        pt.p[ic] = solve_momentum(model, pt, ic, p_seed, E);
        return pt;
    };

    PoincareOptions popts;
    popts.t_max = opts.t_max;
    auto return_map = [&](const Eigen::Vector2d& z) -> Eigen::Vector2d {
        const PhasePoint pt = lift_z(z);
        const SectionMap m = poincare(model, sec, pt, opts.n_compose, opts.tol, popts);
        const PhasePoint& q = m.points.back();
        Eigen::Vector2d out(q.x[io], q.p[io]);
        if (coordinate_wraps(model, io))
            out[0] = z[0] + num::wrap_diff(out[0] - z[0]);  // nearest lift
        return out;
    };

    Eigen::Vector2d z(seed.x[io], seed.p[io]);
    const double hfd = opts.fd_step;

    // Newton refinement of the periodic point
    int newton_its = 0;
    for (; newton_its < 25; ++newton_its) {
        const Eigen::Vector2d F = return_map(z) - z;
        if (F.norm() <= opts.newton_tol) break;
        Eigen::Matrix2d J;
        for (int c = 0; c < 2; ++c) {
            Eigen::Vector2d zp = z, zm = z;
            zp[c] += hfd;
            zm[c] -= hfd;
            J.col(c) = (return_map(zp) - return_map(zm)) / (2 * hfd);
        }
        J -= Eigen::Matrix2d::Identity();
        const double det = J.determinant();
        if (std::abs(det) <= 1e-12) {
            // shear / identity blocks cannot be Newton-refined; accept the
            // seed only when it is already periodic to integrator accuracy
            require(F.norm() <= 1e-8, Err::NotPeriodic,
                    "return-map Jacobian is singular and the seed is not periodic");
            break;
        }
        const Eigen::Vector2d step = J.inverse() * F;
        z -= step;
        if (step.norm() <= opts.newton_tol) break;
        require(newton_its < 24, Err::NotPeriodic, "periodic-orbit refinement did not converge");
    }

    ReturnMapLinearization out;
    out.fixed_point = z;
    out.newton_iterations = newton_its;
    for (int c = 0; c < 2; ++c) {
        Eigen::Vector2d zp = z, zm = z;
        zp[c] += hfd;
        zm[c] -= hfd;
        out.monodromy.col(c) = (return_map(zp) - return_map(zm)) / (2 * hfd);
    }
    out.det = out.monodromy.determinant();
    require(std::abs(out.det - 1.0) <= 1e-3, Err::IllConditioned,
            "section map determinant far from 1: " + std::to_string(out.det));
    return out;
}

}  // namespace mjs

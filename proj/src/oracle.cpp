#include "mjspectra/oracle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <future>
#include <limits>
#include <random>

#include "mjspectra/banded.hpp"
#include "mjspectra/errors.hpp"
#include "mjspectra/num.hpp"

namespace mjs::oracle {

namespace {

// complex Fourier coefficients c_m of a real trig series, m = -N..N
std::vector<std::complex<double>> complex_coeffs(const TrigSeries& f) {
    const int N = f.degree();
    std::vector<std::complex<double>> c(2 * N + 1, 0.0);
    c[N] = f.cos_coeffs()[0];
    for (int m = 1; m <= N; ++m) {
        const std::complex<double> cm(0.5 * f.cos_coeffs()[m], -0.5 * f.sin_coeffs()[m]);
        c[N + m] = cm;
        c[N - m] = std::conj(cm);
    }
    return c;
}

template <class Scalar>
Scalar to_scalar(const std::complex<double>& z);
template <>
double to_scalar<double>(const std::complex<double>& z) { return z.real(); }
template <>
std::complex<double> to_scalar<std::complex<double>>(const std::complex<double>& z) { return z; }

template <class Scalar>
void B_matvec(const GalerkinProblem& P, const Scalar* x, Scalar* y) {
    const int side = P.side();
    const int n = P.dim();
    std::fill(y, y + n, Scalar(0));
    for (const auto& [m, c] : P.stencil) {
        const Scalar coef = to_scalar<Scalar>(c);
        const int m1 = m[0], m2 = m[1];
        const int l1_lo = std::max(-P.M, -P.M - m1), l1_hi = std::min(P.M, P.M - m1);
        const int l2_lo = std::max(-P.M, -P.M - m2), l2_hi = std::min(P.M, P.M - m2);
        for (int l1 = l1_lo; l1 <= l1_hi; ++l1) {
            const int src = (l1 + P.M) * side;
            const int dst = (l1 + m1 + P.M) * side;
            for (int l2 = l2_lo; l2 <= l2_hi; ++l2)
                y[dst + (l2 + m2 + P.M)] += coef * x[src + (l2 + P.M)];
        }
    }
}

template <class Scalar>
void A_matvec(const GalerkinProblem& P, const Scalar* x, Scalar* y) {
    for (int i = 0; i < P.dim(); ++i) y[i] = Scalar(P.Adiag[i]) * x[i];
}

// band filling of A - sigma B
template <class Scalar>
num::BandedLDL<Scalar> build_shifted(const GalerkinProblem& P, double sigma) {
    num::BandedLDL<Scalar> F(P.dim(), P.band_width());
    const int side = P.side();
    for (int j = 0; j < P.dim(); ++j) F.at(j, j) = Scalar(P.Adiag[j]);
    for (const auto& [m, c] : P.stencil) {
        const int delta = m[0] * side + m[1];
        if (delta < 0) continue;  // lower triangle (and diagonal) only
        const Scalar coef = to_scalar<Scalar>(c) * Scalar(-sigma);
        const int m1 = m[0], m2 = m[1];
        for (int l1 = std::max(-P.M, -P.M - m1); l1 <= std::min(P.M, P.M - m1); ++l1)
            for (int l2 = std::max(-P.M, -P.M - m2); l2 <= std::min(P.M, P.M - m2); ++l2) {
                const int j = (l1 + P.M) * side + (l2 + P.M);
                F.at(j + delta, j) += coef;
            }
    }
    F.factorize();
    return F;
}

}  // namespace

std::complex<double> GalerkinProblem::B_entry(const Eigen::Vector2i& k,
                                              const Eigen::Vector2i& l) const {
    const Eigen::Vector2i m = k - l;
    for (const auto& [off, c] : stencil)
        if (off == m) return c;
    return 0.0;
}

int GalerkinProblem::band_width() const {
    int bw = 0;
    for (const auto& [m, c] : stencil) bw = std::max(bw, m[0] * side() + m[1]);
    return bw;
}

GalerkinProblem assemble(const Liouville& model, double h, int M) {
    require(h > 0.0, Err::InvalidArgument, "h must be positive");
    require(M >= model.u.degree() + model.v.degree() + 8, Err::InvalidArgument,
            "mode cutoff too small: need M >= deg u + deg v + 8");
    require(model.u.grid_min() + model.v.grid_min() > 0.0, Err::NotPositive,
            "u + v must be positive");
    GalerkinProblem P;
    P.h = h;
    P.M = M;
    P.real_symmetric = model.u.is_even() && model.v.is_even();
    P.Adiag.resize(P.dim());
    for (int k1 = -M; k1 <= M; ++k1)
        for (int k2 = -M; k2 <= M; ++k2)
            P.Adiag[P.index(k1, k2)] = h * h * (double(k1) * k1 + double(k2) * k2);

    const auto cu = complex_coeffs(model.u);
    const auto cv = complex_coeffs(model.v);
    const int Nu = model.u.degree(), Nv = model.v.degree();
    // constant term carries u_0 + v_0; x1 modes from u, x2 modes from v
    P.stencil.push_back({{0, 0}, cu[Nu] + cv[Nv]});
    for (int m = 1; m <= Nu; ++m) {
        if (std::abs(cu[Nu + m]) == 0.0) continue;
        P.stencil.push_back({{m, 0}, cu[Nu + m]});
        P.stencil.push_back({{-m, 0}, cu[Nu - m]});
    }
    for (int m = 1; m <= Nv; ++m) {
        if (std::abs(cv[Nv + m]) == 0.0) continue;
        P.stencil.push_back({{0, m}, cv[Nv + m]});
        P.stencil.push_back({{0, -m}, cv[Nv - m]});
    }

    // positivity probe of the mass operator at a small cutoff (the full-grid
    // minimum of u + v already guarantees definiteness analytically)
    const int Mp = std::min({M, Nu + Nv + 4, 10});
    const int sp = 2 * Mp + 1;
    Eigen::MatrixXcd Bp = Eigen::MatrixXcd::Zero(sp * sp, sp * sp);
    for (int k1 = -Mp; k1 <= Mp; ++k1)
        for (int k2 = -Mp; k2 <= Mp; ++k2)
            for (const auto& [m, c] : P.stencil) {
                const int l1 = k1 - m[0], l2 = k2 - m[1];
                if (std::abs(l1) > Mp || std::abs(l2) > Mp) continue;
                Bp((k1 + Mp) * sp + (k2 + Mp), (l1 + Mp) * sp + (l2 + Mp)) = c;
            }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> probe(Bp, Eigen::EigenvaluesOnly);
    require(probe.eigenvalues().minCoeff() > 0.0, Err::NotPositive,
            "mass operator failed the positivity probe");
    return P;
}

double SpectrumWindow::gap_prev(std::size_t j) const {
    return j == 0 ? std::numeric_limits<double>::infinity() : lambdas[j] - lambdas[j - 1];
}

double SpectrumWindow::gap_next(std::size_t j) const {
    return j + 1 >= lambdas.size() ? std::numeric_limits<double>::infinity()
                                   : lambdas[j + 1] - lambdas[j];
}

// --------------------------- dense path -------------------------------------

namespace {

template <class Mat>
DenseSolution dense_solve_impl(const GalerkinProblem& P, double E, double half_width,
                               const SolveOptions& opts) {
    using Scalar = typename Mat::Scalar;
    const int n = P.dim();
    Mat A = Mat::Zero(n, n), B = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i) A(i, i) = Scalar(P.Adiag[i]);
    const int side = P.side();
    for (const auto& [m, c] : P.stencil)
        for (int l1 = std::max(-P.M, -P.M - m[0]); l1 <= std::min(P.M, P.M - m[0]); ++l1)
            for (int l2 = std::max(-P.M, -P.M - m[1]); l2 <= std::min(P.M, P.M - m[1]); ++l2) {
                const int j = (l1 + P.M) * side + (l2 + P.M);
                const int i = (l1 + m[0] + P.M) * side + (l2 + m[1] + P.M);
                B(i, j) = to_scalar<Scalar>(c);
            }
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(A, B);
    require(es.info() == Eigen::Success, Err::NotConverged, "dense generalized eigensolve failed");

    DenseSolution sol;
    sol.window.h = P.h;
    sol.window.delta = opts.delta;
    sol.window.center = E;
    sol.window.half_width = half_width;
    std::vector<int> keep;
    for (int i = 0; i < n; ++i)
        if (std::abs(es.eigenvalues()[i] - E) <= half_width) keep.push_back(i);
    sol.window.lambdas.reserve(keep.size());
    sol.vectors.resize(n, static_cast<int>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) {
        const double lam = es.eigenvalues()[keep[j]];
        sol.window.lambdas.push_back(lam);
        const auto x = es.eigenvectors().col(keep[j]);
        sol.vectors.col(static_cast<int>(j)) = x.template cast<std::complex<double>>();
        const double resid = (A * x - Scalar(lam) * (B * x)).norm() / (B * x).norm();
        sol.window.max_residual = std::max(sol.window.max_residual, resid);
    }
    return sol;
}

}  // namespace

DenseSolution solve_window_dense(const GalerkinProblem& problem, double E, double half_width,
                                 const SolveOptions& opts) {
    if (problem.real_symmetric)
        return dense_solve_impl<Eigen::MatrixXd>(problem, E, half_width, opts);
    return dense_solve_impl<Eigen::MatrixXcd>(problem, E, half_width, opts);
}

// ------------------------- shift-invert path --------------------------------

namespace {

template <class Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <class Scalar>
double b_dot_real(const GalerkinProblem& P, const Vec<Scalar>& x, const Vec<Scalar>& bx,
                  const Vec<Scalar>& y) {
    (void)P;
    (void)x;
    if constexpr (std::is_same_v<Scalar, double>)
        return bx.dot(y);
    else
        return bx.dot(y).real();
}

/// One deflated Lanczos sweep at shift sigma; harvests eigenpairs with
/// lambda in (lo, hi]. Returns the number of NEW eigenvalues harvested.
template <class Scalar>
int lanczos_sweep(const GalerkinProblem& P, const num::BandedLDL<Scalar>& F, double sigma,
                  double lo, double hi, std::vector<Vec<Scalar>>& deflation,
                  std::vector<double>& harvested, double& max_residual, std::mt19937_64& rng,
                  const SolveOptions& opts, int m_budget) {
    const int n = P.dim();
    const int m_max = std::min(opts.lanczos_max, std::max(m_budget, 24));

    std::vector<Vec<Scalar>> V;
    V.reserve(m_max + 1);
    std::vector<double> alpha, beta;

    auto Bmul = [&](const Vec<Scalar>& x) {
        Vec<Scalar> y(n);
        B_matvec<Scalar>(P, x.data(), y.data());
        return y;
    };
    auto deflate = [&](Vec<Scalar>& w) {
        if (deflation.empty()) return;
        const Vec<Scalar> bw = Bmul(w);
        for (const auto& x : deflation) {
            if constexpr (std::is_same_v<Scalar, double>)
                w -= x * x.dot(bw);
            else
                w -= x * x.dot(bw);
        }
    };

    // random start, B-orthogonal to the converged set
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vec<Scalar> v(n);
    for (int i = 0; i < n; ++i) {
        if constexpr (std::is_same_v<Scalar, double>)
            v[i] = gauss(rng);
        else
            v[i] = std::complex<double>(gauss(rng), gauss(rng));
    }
    deflate(v);
    deflate(v);
    {
        const double nb = std::sqrt(b_dot_real<Scalar>(P, v, Bmul(v), v));
        if (nb < 1e-13) return 0;  // deflated space exhausted
        v /= nb;
    }
    V.push_back(v);

    int harvested_now = 0;
    for (int j = 0; j < m_max; ++j) {
        Vec<Scalar> w = Bmul(V[j]);
        F.solve(w.data());
        deflate(w);
        if (j > 0) w -= V[j - 1] * Scalar(beta[j - 1]);
        const double a = b_dot_real<Scalar>(P, V[j], Bmul(w), V[j]);
        w -= V[j] * Scalar(a);
        alpha.push_back(a);
        // full reorthogonalization (two passes)
        for (int pass = 0; pass < 2; ++pass) {
            const Vec<Scalar> bw = Bmul(w);
            for (const auto& q : V) w -= q * q.dot(bw);
        }
        const double b = std::sqrt(std::max(b_dot_real<Scalar>(P, w, Bmul(w), w), 0.0));
        beta.push_back(b);
        if (b < 1e-12) break;  // invariant subspace found
        V.push_back(w / Scalar(b));
    }

    const int m = static_cast<int>(alpha.size());
    if (m == 0) return 0;
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        T(i, i) = alpha[i];
        if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tes(T);

    const bool debug = std::getenv("MJS_DEBUG_SLICES") != nullptr;
    for (int i = 0; i < m; ++i) {
        const double theta = tes.eigenvalues()[i];
        if (std::abs(theta) < 1e-14) continue;
        const double lam = sigma + 1.0 / theta;
        const bool in_slice = lam > lo && lam <= hi;
        // cheap pre-filter only; the true residual decides. Tight clusters
        // plateau around 1e-9 relative here while their residual is fine.
        const double est = std::abs(beta[m - 1] * tes.eigenvectors()(m - 1, i));
        if (est > 1e-5 * std::max(std::abs(theta), 1e-6)) {
            if (debug && in_slice && est < 1e-3 * std::abs(theta))
                std::fprintf(stderr, "    near-miss lam=%.12f theta=%.3g est/theta=%.2e\n", lam,
                             theta, est / std::abs(theta));
            continue;
        }
        // assemble the Ritz vector and verify the true residual
        Vec<Scalar> x = Vec<Scalar>::Zero(P.dim());
        for (int q = 0; q < m; ++q) x += V[q] * Scalar(tes.eigenvectors()(q, i));
        // ghost protection: a copy of an already-deflated direction carries
        // no new information; keep only the genuinely new component
        deflate(x);
        Vec<Scalar> bx = Bmul(x);
        const double xn = std::sqrt(std::max(b_dot_real<Scalar>(P, x, bx, x), 0.0));
        if (xn < 0.1) continue;
        x /= xn;
        bx = Bmul(x);
        Vec<Scalar> ax(P.dim());
        A_matvec<Scalar>(P, x.data(), ax.data());
        double resid = (ax - lam * bx).norm() / bx.norm();
        // inverse-iteration polish on the deflated operator; cluster copies
        // from short restarts land around 1e-6 and contract fast here
        for (int polish = 0; polish < 6 && resid > opts.residual_tol; ++polish) {
            Vec<Scalar> y = bx;
            F.solve(y.data());
            deflate(y);
            const Vec<Scalar> by = Bmul(y);
            const double yn = std::sqrt(std::max(b_dot_real<Scalar>(P, y, by, y), 0.0));
            if (yn < 1e-12) break;
            x = y / yn;
            bx = Bmul(x);
            A_matvec<Scalar>(P, x.data(), ax.data());
            // Rayleigh quotient update in the pencil metric
            const double num_r = [&] {
                if constexpr (std::is_same_v<Scalar, double>)
                    return x.dot(ax);
                else
                    return x.dot(ax).real();
            }();
            lam = num_r;
            resid = (ax - lam * bx).norm() / bx.norm();
        }
        if (resid > opts.residual_tol) {
            if (std::getenv("MJS_DEBUG_SLICES") && in_slice)
                std::fprintf(stderr, "    resid-reject lam=%.12f resid=%.2e\n", lam, resid);
            continue;
        }
        // converged pairs outside the slice are deflated but not harvested;
        // their slice finds them from its own shift
        deflation.push_back(x);
        if (lam > lo && lam <= hi) {
            harvested.push_back(lam);
            max_residual = std::max(max_residual, resid);
            ++harvested_now;
        }
    }
    return harvested_now;
}

template <class Scalar>
int pencil_count_below(const GalerkinProblem& P, double sigma) {
    // inertia of A - sigma B equals the number of pencil eigenvalues < sigma
    for (int attempt = 0; attempt < 6; ++attempt) {
        try {
            return build_shifted<Scalar>(P, sigma).negative_count();
        } catch (const Error& e) {
            if (e.kind() != Err::SingularJacobian) throw;
            sigma += (attempt + 1) * 3e-7 * std::max(1.0, std::abs(sigma));
        }
    }
    fail(Err::NotConverged, "could not factorize near the window edge");
}

template <class Scalar>
void solve_slice(const GalerkinProblem& P, double lo, double hi, int needed,
                 std::vector<double>& out, double& max_residual, const SolveOptions& opts,
                 std::uint64_t seed) {
    if (needed <= 0) return;
    std::mt19937_64 rng(seed);
    double sigma = 0.5 * (lo + hi);
    std::vector<Vec<Scalar>> deflation;
    std::vector<double> harvested;

    const bool debug = std::getenv("MJS_DEBUG_SLICES") != nullptr;
    for (int attempt = 0;; ++attempt) {
        try {
            const auto F = build_shifted<Scalar>(P, sigma);
            int sweeps = 0;
            while (static_cast<int>(harvested.size()) < needed && sweeps < opts.max_sweeps) {
                const int missing = needed - static_cast<int>(harvested.size());
                const int budget = std::min(opts.lanczos_max, 2 * missing + 40);
                const int got = lanczos_sweep<Scalar>(P, F, sigma, lo, hi, deflation, harvested,
                                                      max_residual, rng, opts, budget);
                ++sweeps;
                if (debug)
                    std::fprintf(stderr, "[slice %.6f..%.6f] sweep %d budget %d got %d (%zu/%d)\n",
                                 lo, hi, sweeps, budget, got, harvested.size(), needed);
            }
            break;
        } catch (const Error& e) {
            if (e.kind() != Err::SingularJacobian || attempt >= 5) throw;
            sigma += (attempt + 1) * 1e-5 * std::max(1.0, hi - lo);
        }
    }
    require(static_cast<int>(harvested.size()) == needed, Err::NotConverged,
            "slice (" + std::to_string(lo) + ", " + std::to_string(hi) + "] certified " +
                std::to_string(needed) + " eigenvalues but " +
                std::to_string(harvested.size()) + " converged");
    out.insert(out.end(), harvested.begin(), harvested.end());
}

template <class Scalar>
SpectrumWindow iterative_solve(const GalerkinProblem& P, double E, double half_width,
                               const SolveOptions& opts) {
    SpectrumWindow win;
    win.h = P.h;
    win.delta = opts.delta;
    win.center = E;
    win.half_width = half_width;

    const double lo = E - half_width, hi = E + half_width;
    // slice edges from the phase-space density estimate, then certified and
    // refined with inertia counts
    double mean_weight = 0.0;
    for (const auto& [m, c] : P.stencil)
        if (m[0] == 0 && m[1] == 0) mean_weight = c.real();
    const double density = num::two_pi / 2.0 * std::max(mean_weight, 1e-6) / (P.h * P.h);
    int ns = std::max(1, static_cast<int>(std::ceil(2.0 * half_width * density /
                                                    std::max(1, opts.nev_per_slice))));

    struct Edge {
        double x;
        int count;
    };
    std::vector<Edge> edges;
    for (int i = 0; i <= ns; ++i) {
        const double x = lo + (hi - lo) * i / ns;
        edges.push_back({x, pencil_count_below<Scalar>(P, x)});
    }
    // split any slice that got too crowded for one shift
    for (std::size_t i = 0; i + 1 < edges.size();) {
        if (edges[i + 1].count - edges[i].count > 2 * opts.nev_per_slice &&
            edges[i + 1].x - edges[i].x > 1e-9) {
            const double mid = 0.5 * (edges[i].x + edges[i + 1].x);
            edges.insert(edges.begin() + i + 1, {mid, pencil_count_below<Scalar>(P, mid)});
        } else {
            ++i;
        }
    }

    std::vector<std::vector<double>> slice_out(edges.size() - 1);
    std::vector<double> slice_resid(edges.size() - 1, 0.0);
    auto run_slice = [&](std::size_t i) {
        solve_slice<Scalar>(P, edges[i].x, edges[i + 1].x,
                            edges[i + 1].count - edges[i].count, slice_out[i], slice_resid[i],
                            opts, opts.seed + 1000003 * (i + 1));
    };
    if (opts.jobs > 1) {
        std::vector<std::future<void>> futs;
        std::size_t next = 0;
        // simple bounded-concurrency pool with deterministic slice outputs
        while (next < slice_out.size() || !futs.empty()) {
            while (next < slice_out.size() && static_cast<int>(futs.size()) < opts.jobs)
                futs.push_back(std::async(std::launch::async, run_slice, next++));
            futs.front().get();
            futs.erase(futs.begin());
        }
    } else {
        for (std::size_t i = 0; i + 1 < edges.size(); ++i) run_slice(i);
    }

    for (std::size_t i = 0; i < slice_out.size(); ++i) {
        win.lambdas.insert(win.lambdas.end(), slice_out[i].begin(), slice_out[i].end());
        win.max_residual = std::max(win.max_residual, slice_resid[i]);
    }
    std::sort(win.lambdas.begin(), win.lambdas.end());
    return win;
}

}  // namespace

SpectrumWindow solve_window(const GalerkinProblem& problem, double E, double half_width,
                            const SolveOptions& opts) {
    require(half_width > 0.0, Err::InvalidArgument, "window half-width must be positive");
    if (problem.dim() <= opts.dense_threshold)
        return solve_window_dense(problem, E, half_width, opts).window;
    if (problem.real_symmetric) return iterative_solve<double>(problem, E, half_width, opts);
    return iterative_solve<std::complex<double>>(problem, E, half_width, opts);
}

// ------------------------------ reports -------------------------------------

MatchReport match_spectra(const std::vector<double>& predicted, const SpectrumWindow& computed,
                          double tol) {
    struct Cand {
        double d;
        int i, j;
    };
    std::vector<Cand> cands;
    const auto& lam = computed.lambdas;
    for (int i = 0; i < static_cast<int>(predicted.size()); ++i) {
        const auto it = std::lower_bound(lam.begin(), lam.end(), predicted[i]);
        const int j0 = static_cast<int>(it - lam.begin());
        for (int j = j0 - 64; j <= j0 + 64; ++j) {
            if (j < 0 || j >= static_cast<int>(lam.size())) continue;
            const double d = std::abs(predicted[i] - lam[j]);
            if (d <= tol) cands.push_back({d, i, j});
        }
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        if (a.d != b.d) return a.d < b.d;
        if (a.i != b.i) return a.i < b.i;
        return a.j < b.j;
    });
    MatchReport rep;
    std::vector<char> used_i(predicted.size(), 0), used_j(lam.size(), 0);
    for (const auto& c : cands) {
        if (used_i[c.i] || used_j[c.j]) continue;
        used_i[c.i] = used_j[c.j] = 1;
        rep.pairs.push_back({c.i, c.j, c.d});
        rep.max_error = std::max(rep.max_error, c.d);
    }
    for (char u : used_i)
        if (!u) ++rep.unmatched_predicted;
    for (char u : used_j)
        if (!u) ++rep.unmatched_computed;
    return rep;
}

GapStats gap_statistics(const SpectrumWindow& window, double threshold) {
    require(window.count() >= 2, Err::TooFewEigenvalues, "need at least two eigenvalues");
    GapStats st;
    st.threshold = threshold;
    st.n = window.count();
    int hit = 0;
    for (std::size_t j = 0; j < window.count(); ++j)
        if (std::min(window.gap_prev(j), window.gap_next(j)) <= threshold) ++hit;
    st.fraction = static_cast<double>(hit) / static_cast<double>(window.count());
    // log-spaced histogram of the nearest-neighbor gaps
    const int nbins = 32;
    st.bin_edges.resize(nbins + 1);
    for (int b = 0; b <= nbins; ++b)
        st.bin_edges[b] = std::pow(10.0, -16.0 + 16.0 * b / nbins);
    st.counts.assign(nbins + 1, 0);  // last bin collects overflow
    for (std::size_t j = 0; j + 1 < window.count(); ++j) {
        const double g = window.lambdas[j + 1] - window.lambdas[j];
        const int b = g <= st.bin_edges[0]
                          ? 0
                          : std::min(nbins, static_cast<int>(std::floor(
                                                (std::log10(g) + 16.0) * nbins / 16.0)));
        ++st.counts[b];
    }
    return st;
}

std::vector<double> larmor_spectrum(const TrigSeries& omega1, double k1, double h, int M) {
    require(M >= 64, Err::InvalidArgument, "larmor mode cutoff M must be >= 64");
    const int n = 2 * M + 1;
    const auto c = complex_coeffs(omega1);
    const int N = omega1.degree();
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(n, n);
    for (int m = -M; m <= M; ++m) {
        H(m + M, m + M) = 0.5 * h * h * double(m) * m;
        for (int d = -N; d <= N; ++d) {
            const int l = m - d;
            if (std::abs(l) > M) continue;
            H(m + M, l + M) += k1 * c[N + d];
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H, Eigen::EigenvaluesOnly);
    require(es.info() == Eigen::Success, Err::NotConverged, "larmor eigensolve failed");
    return std::vector<double>(es.eigenvalues().data(), es.eigenvalues().data() + n);
}

ReversalPairing reversal_pairing(const GalerkinProblem& problem, const DenseSolution& sol) {
    const int n = problem.dim();
    const int ncols = static_cast<int>(sol.vectors.cols());
    ReversalPairing rp;
    rp.partner.assign(ncols, -1);
    rp.splitting.assign(ncols, 0.0);
    rp.overlap.assign(ncols, 0.0);

    auto gamma = [&](const Eigen::VectorXcd& x) {
        Eigen::VectorXcd y(n);
        for (int k1 = -problem.M; k1 <= problem.M; ++k1)
            for (int k2 = -problem.M; k2 <= problem.M; ++k2)
                y[problem.index(k1, k2)] = std::conj(x[problem.index(-k1, -k2)]);
        return y;
    };

    // B-inner products against the Gamma image
    for (int i = 0; i < ncols; ++i) {
        const Eigen::VectorXcd gx = gamma(sol.vectors.col(i));
        Eigen::VectorXcd bgx(n);
        B_matvec<std::complex<double>>(problem, gx.data(), bgx.data());
        double best = -1.0;
        for (int j = 0; j < ncols; ++j) {
            const double ov = std::abs(sol.vectors.col(j).dot(bgx));
            if (ov > best) {
                best = ov;
                rp.partner[i] = j;
            }
        }
        rp.overlap[i] = best;
        rp.splitting[i] =
            std::abs(sol.window.lambdas[i] - sol.window.lambdas[rp.partner[i]]);
    }
    return rp;
}

}  // namespace mjs::oracle

#include "mjspectra/bsm.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "mjspectra/errors.hpp"
#include "mjspectra/num.hpp"

namespace mjs::bsm {

void validate(const QuantizeParams& params) {
    require(params.h > 0.0 && params.h <= 0.5, Err::InvalidArgument, "h must lie in (0, 0.5]");
    require(params.delta > 0.0 && params.delta <= 1.0, Err::InvalidArgument,
            "delta must lie in (0, 1]");
    require(params.C0 > 0.0, Err::InvalidArgument, "C0 must be positive");
    for (int m : params.maslov)
        require(m == 0 || m == 2, Err::InvalidArgument, "maslov offsets are 0 or 2 per cycle");
}

std::vector<Eigen::Vector2i> enumerate_lattice(const QuantizeParams& params) {
    validate(params);
    const double w = params.C0 * std::pow(params.h, params.delta);
    std::vector<Eigen::Vector2i> out;
    std::array<std::pair<long, long>, 2> range;
    // the window is closed; keep exact-boundary hits despite rounding
    const double eps = 1e-9;
    for (int i = 0; i < 2; ++i) {
        range[i] = {static_cast<long>(std::ceil((params.center_actions[i] - w) / params.h - eps)),
                    static_cast<long>(std::floor((params.center_actions[i] + w) / params.h + eps))};
    }
    for (long k1 = range[0].first; k1 <= range[0].second; ++k1)
        for (long k2 = range[1].first; k2 <= range[1].second; ++k2)
            out.push_back({static_cast<int>(k1), static_cast<int>(k2)});
    require(!out.empty(), Err::WindowEmpty,
            "no lattice point in the action window (width " + std::to_string(2 * w) + ")");
    return out;
}

InvertReport invert_actions(const Liouville& model, const Eigen::Vector2d& J_prime,
                            Eigen::Vector2d seed_Ec, double fd_step) {
    const auto seed_types = aa::separate(model, seed_Ec[0], seed_Ec[1]);

    auto actions_at = [&](const Eigen::Vector2d& ec) {
        const auto sep = aa::separate(model, ec[0], ec[1]);
        for (int ax = 0; ax < 2; ++ax)
            require(sep.axis[ax].type == seed_types.axis[ax].type, Err::ClassificationChange,
                    "cycle type flips during the action inversion");
        return aa::actions(model, ec[0], ec[1]);
    };

    Eigen::Vector2d ec = seed_Ec;
    for (int it = 0; it < 50; ++it) {
        const Eigen::Vector2d resid = actions_at(ec) - J_prime;
        if (resid.norm() <= 1e-14 * std::max(1.0, J_prime.norm()))
            return {ec, resid.norm(), it};
        Eigen::Matrix2d N;
        for (int c = 0; c < 2; ++c) {
            Eigen::Vector2d p = ec, m = ec;
            const double step = fd_step * std::max(1.0, std::abs(ec[c]));
            p[c] += step;
            m[c] -= step;
            N.col(c) = (actions_at(p) - actions_at(m)) / (2.0 * step);
        }
        require(std::abs(N.determinant()) >= 1e-12, Err::SingularJacobian,
                "action Jacobian determinant below 1e-12");
        const Eigen::Vector2d step = N.partialPivLu().solve(resid);
        ec -= step;
        if (step.norm() <= 1e-12) {
            const double r = (actions_at(ec) - J_prime).norm();
            require(r <= 1e-10, Err::NoConvergence, "inversion stalled with residual above 1e-10");
            return {ec, r, it + 1};
        }
    }
    fail(Err::NoConvergence, "action inversion exceeded 50 iterations");
}

const char* status_name(PointStatus s) {
    switch (s) {
        case PointStatus::Ok: return "ok";
        case PointStatus::NoConvergence: return "no_convergence";
        case PointStatus::SingularJacobian: return "singular_jacobian";
        case PointStatus::ClassificationChange: return "classification_change";
    }
    return "unknown";
}

SpectrumPrediction predict_spectrum(const Liouville& model, const QuantizeParams& params,
                                    const Eigen::Vector2d& seed_Ec) {
    validate(params);
    SpectrumPrediction pred;
    pred.params = params;
    pred.E_center = seed_Ec[0];

    const auto lattice = enumerate_lattice(params);
    for (const auto& k : lattice) {
        BSMLatticePoint pt;
        pt.k = k;
        pt.J_prime = params.h * (k.cast<double>() +
                                 Eigen::Vector2d(params.maslov[0] / 4.0, params.maslov[1] / 4.0));
        try {
            const InvertReport rep = invert_actions(model, pt.J_prime, seed_Ec);
            pt.energy = rep.Ec[0];
            pt.sep_const = rep.Ec[1];
            pt.E_k = rep.Ec[0];
            pt.residual = rep.residual;
            pred.points.push_back(pt);
        } catch (const Error& e) {
            switch (e.kind()) {
                case Err::ClassificationChange: pt.status = PointStatus::ClassificationChange; break;
                case Err::SingularJacobian: pt.status = PointStatus::SingularJacobian; break;
                default: pt.status = PointStatus::NoConvergence; break;
            }
            pred.failed.push_back(pt);
        }
    }
    std::sort(pred.points.begin(), pred.points.end(),
              [](const BSMLatticePoint& a, const BSMLatticePoint& b) { return a.E_k < b.E_k; });
    const double hdelta = std::pow(params.h, params.delta);
    for (const auto& pt : pred.points)
        pred.effective_C1 =
            std::max(pred.effective_C1, std::abs(pt.E_k - pred.E_center) / hdelta);
    return pred;
}

std::string prediction_to_csv(const SpectrumPrediction& pred) {
    std::ostringstream os;
    os.precision(16);
    os << "k1,k2,J1p,J2p,E,c,E_k,residual,status\n";
    auto row = [&](const BSMLatticePoint& p) {
        os << p.k[0] << ',' << p.k[1] << ',' << p.J_prime[0] << ',' << p.J_prime[1] << ','
           << p.energy << ',' << p.sep_const << ',' << p.E_k << ',' << p.residual << ','
           << status_name(p.status) << '\n';
    };
    for (const auto& p : pred.points) row(p);
    for (const auto& p : pred.failed) row(p);
    return os.str();
}

}  // namespace mjs::bsm

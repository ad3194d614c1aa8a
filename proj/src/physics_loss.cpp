#include "rfm/physics_loss.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "rfm/errors.hpp"

namespace rfm {

namespace {

template <class P>
void set_midpoints(P& p, const KineticRanges& r) {
    p.k0 = r.k0.mid();
    p.Ea = r.Ea.mid();
    p.dH = r.dH.mid();
    p.Cp = r.Cp.mid();
    p.rhoL = r.rhoL.mid();
}

// Residual written as r = dX/dt + a X + c + beta * rate, per state.
struct Linearized {
    double a_CA = 0.0;
    double c_CA = 0.0;
    double a_T = 0.0;
    double c_T = 0.0;
    double beta = 0.0;
    double k0 = 0.0;
    double Ea = 0.0;
    double R = kGasConstant;
};

Linearized linearize(const EstimatedParams& est, const OperatingPoint& pt) {
    Linearized l;
    const auto& u = pt.u;
    switch (est.kind) {
        case ReactorKind::Cstr: {
            const auto& p = std::get<CstrParams>(est.params);
            const double fv = p.F / p.V;
            l.a_CA = fv;
            l.c_CA = -fv * (p.CA0s + u.dCA0);
            l.a_T = fv;
            l.c_T = -fv * p.T0 - (p.Qs + u.dQ) / (p.rhoL * p.Cp * p.V);
            l.beta = p.dH / (p.rhoL * p.Cp);
            l.k0 = p.k0;
            l.Ea = p.Ea;
            l.R = p.R;
            break;
        }
        case ReactorKind::Batch: {
            const auto& p = std::get<BrParams>(est.params);
            l.c_T = -(p.Qs + u.dQ) / (p.rhoL * p.Cp * p.V);
            l.beta = p.dH / (p.rhoL * p.Cp);
            l.k0 = p.k0;
            l.Ea = p.Ea;
            l.R = p.R;
            break;
        }
        case ReactorKind::Pfr: {
            const auto& p = std::get<PfrParams>(est.params);
            const double adv = p.u / p.dz();
            const double hx = p.U / (p.rhoL * p.Cp * p.A) * p.Ac;
            l.a_CA = adv;
            l.c_CA = -adv * pt.x.CA;
            l.a_T = adv + hx;
            l.c_T = -adv * pt.x.T - hx * (p.Tcs + u.dTc);
            l.beta = p.dH / (p.rhoL * p.Cp);
            l.k0 = p.k0;
            l.Ea = p.Ea;
            l.R = p.R;
            break;
        }
    }
    return l;
}

void require_finite(double v, const char* term) {
    if (!std::isfinite(v)) throw NumericalError(term, "non-finite physics residual");
}

}  // namespace

EstimatedParams make_estimated_params(const TaskSpec& task) {
    EstimatedParams est{task.kind, task.order, task.params};
    const auto r = kinetic_ranges(task.kind);
    std::visit([&](auto& p) { set_midpoints(p, r); }, est.params);
    return est;
}

EstimatedParams exact_params(const TaskSpec& task) { return {task.kind, task.order, task.params}; }

LossBreakdown total_loss(const LossWeights& w, double L_d, double L_CA, double L_T) {
    return {L_d, L_CA, L_T, w.g1 * L_d + w.g2 * L_CA + w.g3 * L_T};
}

DataLoss data_loss(const Sequence& pred, const Sequence& target) {
    if (pred.size() != target.size()) throw ShapeError("prediction and target lengths differ");
    DataLoss out;
    out.grad.resize(pred.size());
    double count = 0.0;
    for (std::size_t t = 0; t < pred.size(); ++t) {
        if (pred[t].rows() != target[t].rows() || pred[t].cols() != target[t].cols()) {
            throw ShapeError("prediction and target shapes differ at step " + std::to_string(t));
        }
        count += static_cast<double>(pred[t].size());
    }
    if (count == 0.0) return out;
    for (std::size_t t = 0; t < pred.size(); ++t) {
        Eigen::MatrixXd diff = pred[t] - target[t];
        out.value += diff.squaredNorm();
        out.grad[t] = (2.0 / count) * diff;
    }
    out.value /= count;
    return out;
}

Residual balance_residual(const EstimatedParams& est, const OperatingPoint& point, const State& prev,
                          const State& x, double dt) {
    const auto l = linearize(est, point);
    const double rate = l.k0 * arrhenius(l.Ea, l.R, x.T) * int_pow(x.CA, est.order);
    return {(x.CA - prev.CA) / dt + l.a_CA * x.CA + l.c_CA + rate,
            (x.T - prev.T) / dt + l.a_T * x.T + l.c_T + l.beta * rate};
}

ResidualScale residual_scale(ResidualUnits units, const NormSpec& norm) {
    if (units == ResidualUnits::Physical) return {1.0, 1.0};
    return {norm.CA().width(), norm.T().width()};
}

PhysicsLoss physics_residuals(const EstimatedParams& est, const Sequence& pred,
                              std::span<const OperatingPoint> collocation, const NormSpec& norm, double dt,
                              const ResidualScale& rs) {
    if (!(dt > 0.0)) throw std::invalid_argument("residual step must be positive");
    PhysicsLoss out;
    const std::size_t n = pred.size();
    const auto M = static_cast<Eigen::Index>(collocation.size());
    out.grad_CA.assign(n, Eigen::MatrixXd::Zero(2, M));
    out.grad_T.assign(n, Eigen::MatrixXd::Zero(2, M));
    if (n == 0 || M == 0) return out;
    for (const auto& p : pred)
        if (p.rows() != 2 || p.cols() != M) throw ShapeError("physics predictions must be 2 x collocation count");

    const double wT = norm.T().width();
    const double wCA = norm.CA().width();
    const double sT = rs.T;
    const double sCA = rs.CA;
    const double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(M));
    const int m = est.order;

    for (Eigen::Index b = 0; b < M; ++b) {
        const auto& pt = collocation[static_cast<std::size_t>(b)];
        const auto l = linearize(est, pt);
        State prev = pt.x;
        for (std::size_t i = 0; i < n; ++i) {
            const State x{denormalize(pred[i](0, b), norm.T()), denormalize(pred[i](1, b), norm.CA())};
            const double arr = arrhenius(l.Ea, l.R, x.T);
            const double rate = l.k0 * arr * int_pow(x.CA, m);
            require_finite(rate, "physics.rate");
            const double drate_dT = arr > 0.0 ? rate * l.Ea / (l.R * x.T * x.T) : 0.0;
            const double drate_dCA = m >= 1 ? l.k0 * arr * m * int_pow(x.CA, m - 1) : 0.0;

            const double rCA = (x.CA - prev.CA) / dt + l.a_CA * x.CA + l.c_CA + rate;
            const double rT = (x.T - prev.T) / dt + l.a_T * x.T + l.c_T + l.beta * rate;
            require_finite(rCA, "physics.r_CA");
            require_finite(rT, "physics.r_T");

            const double qCA = rCA / sCA;
            const double qT = rT / sT;
            out.L_CA += qCA * qCA;
            out.L_T += qT * qT;

            // dL/dr for each loss, then chain through X_i (and X_{i-1} when predicted)
            const double gCA = 2.0 * scale * rCA / (sCA * sCA);
            const double gT = 2.0 * scale * rT / (sT * sT);

            const double dCA_CA = 1.0 / dt + l.a_CA + drate_dCA;
            const double dCA_T = drate_dT;
            const double dT_T = 1.0 / dt + l.a_T + l.beta * drate_dT;
            const double dT_CA = l.beta * drate_dCA;

            out.grad_CA[i](0, b) += gCA * dCA_T * wT;
            out.grad_CA[i](1, b) += gCA * dCA_CA * wCA;
            out.grad_T[i](0, b) += gT * dT_T * wT;
            out.grad_T[i](1, b) += gT * dT_CA * wCA;
            if (i > 0) {
                out.grad_CA[i - 1](1, b) -= gCA / dt * wCA;
                out.grad_T[i - 1](0, b) -= gT / dt * wT;
            }
            prev = x;
        }
    }
    out.L_CA *= scale;
    out.L_T *= scale;
    require_finite(out.L_CA, "physics.L_CA");
    require_finite(out.L_T, "physics.L_T");
    return out;
}

}  // namespace rfm

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include <Eigen/Core>

namespace gradcheck {

// Central differences of f at x, one coordinate at a time.
inline Eigen::VectorXd central(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x,
                               double h = 1e-5) {
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        x[i] = xi + h;
        const double fp = f(x);
        x[i] = xi - h;
        const double fm = f(x);
        x[i] = xi;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

// Fourth-order five-point stencil, for functions with strong curvature.
inline Eigen::VectorXd five_point(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x,
                                  double h = 1e-4) {
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        double v[4];
        const double off[4] = {2.0 * h, h, -h, -2.0 * h};
        for (int k = 0; k < 4; ++k) {
            x[i] = xi + off[k];
            v[k] = f(x);
        }
        x[i] = xi;
        g[i] = (-v[0] + 8.0 * v[1] - 8.0 * v[2] + v[3]) / (12.0 * h);
    }
    return g;
}

// Largest entrywise |a - b| / max(|a|, |b|, floor). The floor keeps
// entries that are zero up to difference noise from dominating.
inline double max_relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double floor) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        const double den = std::max({std::abs(a[i]), std::abs(b[i]), floor});
        worst = std::max(worst, std::abs(a[i] - b[i]) / den);
    }
    return worst;
}

}  // namespace gradcheck

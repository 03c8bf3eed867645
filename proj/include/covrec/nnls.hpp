#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <limits>
#include <vector>

namespace covrec {

/// min |A x - b| subject to x >= 0, by the Lawson-Hanson active-set method.
inline Eigen::VectorXd nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
    const Eigen::Index n = a.cols();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    if (n == 0) return x;
    std::vector<bool> passive(std::size_t(n), false);
    const double tol = 10.0 * std::numeric_limits<double>::epsilon() * a.cwiseAbs().colwise().sum().maxCoeff() *
                       double(std::max(a.rows(), n));

    auto solve_passive = [&](Eigen::VectorXd& z) {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (passive[std::size_t(j)]) idx.push_back(j);
        }
        Eigen::MatrixXd ap(a.rows(), Eigen::Index(idx.size()));
        for (std::size_t c = 0; c < idx.size(); ++c) ap.col(Eigen::Index(c)) = a.col(idx[c]);
        const Eigen::VectorXd zp = ap.colPivHouseholderQr().solve(b);
        z.setZero(n);
        for (std::size_t c = 0; c < idx.size(); ++c) z(idx[c]) = zp(Eigen::Index(c));
    };

    const int max_outer = 3 * int(n) + 10;
    for (int outer = 0; outer < max_outer; ++outer) {
        const Eigen::VectorXd w = a.transpose() * (b - a * x);
        Eigen::Index t = -1;
        double best = tol;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (!passive[std::size_t(j)] && w(j) > best) {
                best = w(j);
                t = j;
            }
        }
        if (t < 0) break;
        passive[std::size_t(t)] = true;

        Eigen::VectorXd z;
        for (int inner = 0; inner <= int(n); ++inner) {
            solve_passive(z);
            bool feasible = true;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (passive[std::size_t(j)] && z(j) <= 0.0) feasible = false;
            }
            if (feasible) break;
            double alpha = 1.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (passive[std::size_t(j)] && z(j) <= 0.0) alpha = std::min(alpha, x(j) / (x(j) - z(j)));
            }
            x += alpha * (z - x);
            for (Eigen::Index j = 0; j < n; ++j) {
                if (passive[std::size_t(j)] && x(j) <= tol) {
                    passive[std::size_t(j)] = false;
                    x(j) = 0.0;
                }
            }
        }
        for (Eigen::Index j = 0; j < n; ++j) x(j) = passive[std::size_t(j)] ? std::max(z(j), 0.0) : 0.0;
    }
    return x;
}

}  // namespace covrec

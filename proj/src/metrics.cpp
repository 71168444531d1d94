#include "uvt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace uvt {

double emd_1d(const DistanceDistribution& p, const DistanceDistribution& q) {
    if (!(p.axis == q.axis) || p.mass.size() != q.mass.size())
        throw std::invalid_argument("emd_1d: distributions live on different axes");
    double cdf_gap = 0.0;
    double total = 0.0;
    for (Eigen::Index j = 0; j < p.mass.size(); ++j) {
        cdf_gap += p.mass(j) - q.mass(j);
        total += std::fabs(cdf_gap);
    }
    return total * p.axis.width;
}

double success_rate(std::span<const double> emds, double threshold) {
    if (emds.empty()) throw std::invalid_argument("success_rate: no trials");
    if (!(threshold > 0.0)) throw std::invalid_argument("success_rate: threshold must be positive");
    const auto hits = std::count_if(emds.begin(), emds.end(), [&](double e) { return e <= threshold; });
    return static_cast<double>(hits) / static_cast<double>(emds.size());
}

// Shortest augmenting path formulation with row/column potentials, O(n^3).
std::vector<Eigen::Index> min_cost_assignment(const Eigen::MatrixXd& cost) {
    const Eigen::Index n = cost.rows();
    if (cost.cols() != n) throw std::invalid_argument("min_cost_assignment: cost matrix must be square");
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<Eigen::Index> match_col(n + 1, 0), way(n + 1, 0);
    for (Eigen::Index i = 1; i <= n; ++i) {
        match_col[0] = i;
        Eigen::Index j0 = 0;
        std::vector<double> min_v(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const Eigen::Index i0 = match_col[j0];
            double delta = inf;
            Eigen::Index j1 = 0;
            for (Eigen::Index j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < min_v[j]) {
                    min_v[j] = cur;
                    way[j] = j0;
                }
                if (min_v[j] < delta) {
                    delta = min_v[j];
                    j1 = j;
                }
            }
            for (Eigen::Index j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_v[j] -= delta;
                }
            }
            j0 = j1;
        } while (match_col[j0] != 0);
        do {
            const Eigen::Index j1 = way[j0];
            match_col[j0] = match_col[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<Eigen::Index> row_to_col(n);
    for (Eigen::Index j = 1; j <= n; ++j) row_to_col[match_col[j] - 1] = j - 1;
    return row_to_col;
}

double max_matched_error(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth) {
    if (estimate.size() != truth.size()) return std::numeric_limits<double>::infinity();
    if (truth.size() == 0) return 0.0;
    const Eigen::Index n = truth.size();
    Eigen::MatrixXd cost(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) cost(i, j) = std::fabs(estimate(i) - truth(j));
    const auto assignment = min_cost_assignment(cost);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) worst = std::max(worst, cost(i, assignment[i]));
    return worst;
}

}  // namespace uvt

#include "uvt/udgp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "uvt/rng.hpp"

namespace uvt {

namespace {

std::vector<Eigen::Index> nonzeros(const Indicator& z) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < z.size(); ++i)
        if (z(i) != 0.0) idx.push_back(i);
    return idx;
}

// sum_{a,b in support} z_a z_b accumulated into the bin of their offset.
Eigen::VectorXd pair_bin_mass(const Indicator& z, const DistanceOperators& ops, const std::vector<Eigen::Index>& nz) {
    const Eigen::Index cols = ops.grid().cols;
    Eigen::VectorXd mass = Eigen::VectorXd::Zero(ops.bins());
    for (const Eigen::Index a : nz) {
        const Eigen::Index ax = a % cols, ay = a / cols;
        const double za = z(a);
        for (const Eigen::Index b : nz) mass(ops.offset_bin(b % cols - ax, b / cols - ay)) += za * z(b);
    }
    return mass;
}

// out_i += scale * sum_{j in support} weight[bin(i, j)] z_j.
void add_weighted_correlation(const Indicator& z, const DistanceOperators& ops, const std::vector<Eigen::Index>& nz,
                              const Eigen::VectorXd& weight, double scale, Eigen::VectorXd& out) {
    const Eigen::Index cols = ops.grid().cols, rows = ops.grid().rows;
    for (const Eigen::Index j : nz) {
        const Eigen::Index jx = j % cols, jy = j / cols;
        const double zj = scale * z(j);
        for (Eigen::Index iy = 0; iy < rows; ++iy) {
            double* row = out.data() + iy * cols;
            for (Eigen::Index ix = 0; ix < cols; ++ix) row[ix] += zj * weight(ops.offset_bin(jx - ix, jy - iy));
        }
    }
}

double cross_entropy(const Eigen::VectorXd& q, const Eigen::VectorXd& target, double epsilon) {
    double value = 0.0;
    for (Eigen::Index d = 0; d < q.size(); ++d)
        if (target(d) > 0.0) value -= target(d) * std::log(q(d) + epsilon);
    return value;
}

// Truncated Gaussian over bin offsets -w..w; {1} when sigma is zero.
std::vector<double> blur_kernel(double sigma) {
    if (!(sigma > 0.0)) return {1.0};
    const auto w = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> h(static_cast<std::size_t>(2 * w + 1));
    for (int i = -w; i <= w; ++i) h[static_cast<std::size_t>(i + w)] = std::exp(-0.5 * i * i / (sigma * sigma));
    const double total = std::accumulate(h.begin(), h.end(), 0.0);
    for (double& v : h) v /= total;
    return h;
}

// Symmetric kernel, so this is also its own transpose.
Eigen::VectorXd convolve(const Eigen::VectorXd& x, const std::vector<double>& h) {
    if (h.size() == 1) return x;
    const auto w = static_cast<Eigen::Index>(h.size() / 2);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(x.size());
    for (Eigen::Index d = 0; d < x.size(); ++d)
        for (Eigen::Index o = -w; o <= w; ++o)
            if (d + o >= 0 && d + o < x.size()) out(d) += h[static_cast<std::size_t>(o + w)] * x(d + o);
    return out;
}

ObjectiveValue pair_term(const Indicator& z, const DistanceOperators& ops, const Eigen::VectorXd& target,
                         double epsilon, const std::vector<double>& kernel, bool with_gradient) {
    const auto nz = nonzeros(z);
    const double m = static_cast<double>(ops.cells());
    const Eigen::VectorXd q = convolve(pair_bin_mass(z, ops, nz) / (m * m), kernel);
    ObjectiveValue out;
    out.value = cross_entropy(q, target, epsilon);
    if (!with_gradient) return out;
    Eigen::VectorXd weight = Eigen::VectorXd::Zero(ops.bins());
    for (Eigen::Index d = 0; d < ops.bins(); ++d)
        if (target(d) > 0.0) weight(d) = target(d) / (q(d) + epsilon);
    out.gradient = Eigen::VectorXd::Zero(ops.cells());
    add_weighted_correlation(z, ops, nz, convolve(weight, kernel), -2.0 / (m * m), out.gradient);
    return out;
}

double feasibility_violation(const Indicator& z, double k) {
    return std::max({std::fabs(z.sum() - k), -z.minCoeff(), z.maxCoeff() - 1.0, 0.0});
}

}  // namespace

void GridSpec::validate() const {
    if (cols < 1 || rows < 1 || cells() < 2) throw std::invalid_argument("GridSpec: need at least two cells");
    if (!(cell_size > 0.0)) throw std::invalid_argument("GridSpec: cell size must be positive");
    if (distance_bins.count < 1 || !(distance_bins.width > 0.0))
        throw std::invalid_argument("GridSpec: empty distance axis");
    if (distance_bins.bin_of(0.0) < 0 || distance_bins.bin_of(diameter()) < 0)
        throw std::invalid_argument("GridSpec: distance bins must cover [0, grid diameter]");
}

GridSpec GridSpec::square(Eigen::Index side, double half_width, const DistanceAxis& bins) {
    if (side < 2) throw std::invalid_argument("GridSpec: side must be >= 2");
    GridSpec g;
    g.cols = g.rows = side;
    g.cell_size = 2.0 * half_width / static_cast<double>(side - 1);
    g.origin = Eigen::Vector2d(-half_width, -half_width);
    g.distance_bins = bins;
    return g;
}

GridSpec default_grid(double radius_bound, Eigen::Index side, double half_width) {
    const double cell = 2.0 * half_width / static_cast<double>(side - 1);
    const double reach = std::max(radius_bound, cell * std::sqrt(2.0) * static_cast<double>(side - 1));
    const auto count = static_cast<Eigen::Index>(std::floor(reach / cell + 0.5)) + 1;
    return GridSpec::square(side, half_width, DistanceAxis{0.0, cell, count});
}

DistanceOperators::DistanceOperators(GridSpec grid) : grid_(std::move(grid)), span_x_(2 * grid_.cols - 1) {
    grid_.validate();
    const Eigen::Index span_y = 2 * grid_.rows - 1;
    offset_bin_.resize(static_cast<std::size_t>(span_x_ * span_y));
    bin_offsets_.resize(static_cast<std::size_t>(grid_.distance_bins.count));
    for (Eigen::Index dy = -(grid_.rows - 1); dy <= grid_.rows - 1; ++dy) {
        for (Eigen::Index dx = -(grid_.cols - 1); dx <= grid_.cols - 1; ++dx) {
            const double dist = grid_.cell_size * std::hypot(static_cast<double>(dx), static_cast<double>(dy));
            const auto bin = static_cast<int>(grid_.distance_bins.bin_of(dist));
            offset_bin_[static_cast<std::size_t>((dy + grid_.rows - 1) * span_x_ + (dx + grid_.cols - 1))] = bin;
            bin_offsets_[static_cast<std::size_t>(bin)].emplace_back(static_cast<int>(dx), static_cast<int>(dy));
        }
    }
    radial_bin_.resize(static_cast<std::size_t>(grid_.cells()));
    for (Eigen::Index i = 0; i < grid_.cells(); ++i)
        radial_bin_[static_cast<std::size_t>(i)] = static_cast<int>(grid_.distance_bins.bin_of(grid_.center(i).norm()));
}

Eigen::VectorXd DistanceOperators::apply(Eigen::Index d, const Eigen::VectorXd& z) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(cells());
    for (const auto& [dx, dy] : offsets_in_bin(d)) {
        for (Eigen::Index iy = 0; iy < grid_.rows; ++iy) {
            const Eigen::Index jy = iy + dy;
            if (jy < 0 || jy >= grid_.rows) continue;
            for (Eigen::Index ix = 0; ix < grid_.cols; ++ix) {
                const Eigen::Index jx = ix + dx;
                if (jx < 0 || jx >= grid_.cols) continue;
                out(iy * grid_.cols + ix) += z(jy * grid_.cols + jx);
            }
        }
    }
    return out;
}

Eigen::MatrixXd DistanceOperators::dense(Eigen::Index d) const {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(cells(), cells());
    for (Eigen::Index i = 0; i < cells(); ++i)
        for (Eigen::Index j = 0; j < cells(); ++j)
            if (pair_bin(i, j) == d) a(i, j) = 1.0;
    return a;
}

Eigen::MatrixXd DistanceOperators::radial_matrix() const {
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(bins(), cells());
    for (Eigen::Index i = 0; i < cells(); ++i)
        if (radial_bin(i) >= 0) r(radial_bin(i), i) = 1.0;
    return r;
}

DistanceOperators build_operators(const GridSpec& grid) { return DistanceOperators(grid); }

Eigen::VectorXd q_of_d(const Indicator& z, const DistanceOperators& ops) {
    if (z.size() != ops.cells()) throw std::invalid_argument("q_of_d: indicator size mismatch");
    const double m = static_cast<double>(ops.cells());
    return pair_bin_mass(z, ops, nonzeros(z)) / (m * m);
}

ObjectiveValue objective_and_gradient(const Indicator& z, const DistanceOperators& ops,
                                      const Eigen::VectorXd& pair_target, double epsilon) {
    if (z.size() != ops.cells() || pair_target.size() != ops.bins())
        throw std::invalid_argument("objective_and_gradient: size mismatch");
    return pair_term(z, ops, pair_target, epsilon, {1.0}, true);
}

Indicator project_constraints(const Eigen::VectorXd& v, double k) {
    const auto n = static_cast<double>(v.size());
    if (k > n) throw std::domain_error("project_constraints: K exceeds the number of cells");
    if (k < 0.0) throw std::invalid_argument("project_constraints: K must be nonnegative");
    auto clipped = [&](double tau) { return (v.array() - tau).cwiseMax(0.0).cwiseMin(1.0).matrix().eval(); };
    auto mass = [&](double tau) { return (v.array() - tau).cwiseMax(0.0).cwiseMin(1.0).sum(); };

    double lo = v.minCoeff() - 1.0;  // mass(lo) = n >= k
    double hi = v.maxCoeff();        // mass(hi) = 0 <= k
    for (int iter = 0; iter < 200 && hi - lo > 1e-15 * (1.0 + std::fabs(hi)); ++iter) {
        const double mid = 0.5 * (lo + hi);
        (mass(mid) > k ? lo : hi) = mid;
    }
    double tau = 0.5 * (lo + hi);
    // Solve exactly on the active set identified by bisection.
    double free_sum = 0.0, ones = 0.0, free_count = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double shifted = v(i) - tau;
        if (shifted >= 1.0)
            ones += 1.0;
        else if (shifted > 0.0) {
            free_sum += v(i);
            free_count += 1.0;
        }
    }
    if (free_count > 0.0) {
        const double exact = (free_sum - (k - ones)) / free_count;
        if (std::fabs(mass(exact) - k) <= std::fabs(mass(tau) - k)) tau = exact;
    }
    return clipped(tau);
}

Eigen::VectorXd rebin(const DistanceDistribution& source, const DistanceAxis& target) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(target.count);
    for (Eigen::Index j = 0; j < source.mass.size(); ++j) {
        const double w = source.mass(j);
        if (w == 0.0) continue;
        const double pos = (source.axis.center(j) - target.start) / target.width;
        if (pos <= 0.0) {
            out(0) += w;
        } else if (pos >= static_cast<double>(target.count - 1)) {
            out(target.count - 1) += w;
        } else {
            const auto lo = static_cast<Eigen::Index>(std::floor(pos));
            const double frac = pos - static_cast<double>(lo);
            out(lo) += w * (1.0 - frac);
            out(lo + 1) += w * frac;
        }
    }
    return out;
}

RecoveryObjective::RecoveryObjective(const DistanceOperators& ops, Eigen::VectorXd pair_target,
                                     Eigen::VectorXd radial_target, double k, const RecoveryOptions& options)
    : ops_(ops),
      pair_target_(std::move(pair_target)),
      radial_target_(std::move(radial_target)),
      k_(k),
      epsilon_(options.epsilon),
      lambda_radial_(radial_target_.size() > 0 ? options.lambda_radial : 0.0),
      lambda_projection_(options.projection ? options.lambda_projection : 0.0),
      kernel_(blur_kernel(options.pair_blur)) {
    if (pair_target_.size() != ops_.bins()) throw std::invalid_argument("RecoveryObjective: pair target size");
    if (radial_target_.size() != 0 && radial_target_.size() != ops_.bins())
        throw std::invalid_argument("RecoveryObjective: radial target size");
    if (!(epsilon_ > 0.0)) throw std::invalid_argument("RecoveryObjective: epsilon must be positive");
    if (lambda_projection_ > 0.0) {
        const auto& pc = *options.projection;
        const Eigen::Index bins = 2 * pc.half_bins + 1;
        if (pc.line.size() != bins) throw std::invalid_argument("RecoveryObjective: projection line size");
        const double delta = 2.0 * pc.radius_bound / static_cast<double>(bins);
        const double c = std::cos(pc.angle), s = std::sin(pc.angle);
        projection_bin_.resize(static_cast<std::size_t>(ops_.cells()));
        for (Eigen::Index i = 0; i < ops_.cells(); ++i) {
            const Eigen::Vector2d p = ops_.grid().center(i);
            const double u = std::floor((p.y() * c - p.x() * s) / delta + 0.5);
            projection_bin_[static_cast<std::size_t>(i)] =
                static_cast<int>(std::clamp(u, -static_cast<double>(pc.half_bins), static_cast<double>(pc.half_bins)) +
                                 static_cast<double>(pc.half_bins));
        }
        projection_target_ = pc.line;
    }
}

double RecoveryObjective::value(const Indicator& z) const {
    const auto nz = nonzeros(z);
    double value = pair_term(z, ops_, pair_target_, epsilon_, kernel_, false).value;
    if (lambda_radial_ > 0.0) {
        Eigen::VectorXd rz = Eigen::VectorXd::Zero(ops_.bins());
        for (const Eigen::Index i : nz)
            if (ops_.radial_bin(i) >= 0) rz(ops_.radial_bin(i)) += z(i);
        value += lambda_radial_ * (rz / k_ - radial_target_).squaredNorm();
    }
    if (lambda_projection_ > 0.0) {
        Eigen::VectorXd pz = Eigen::VectorXd::Zero(projection_target_.size());
        for (const Eigen::Index i : nz) pz(projection_bin_[static_cast<std::size_t>(i)]) += z(i);
        value += lambda_projection_ * (pz - projection_target_).squaredNorm();
    }
    return value;
}

ObjectiveValue RecoveryObjective::operator()(const Indicator& z) const {
    ObjectiveValue out = pair_term(z, ops_, pair_target_, epsilon_, kernel_, true);
    if (lambda_radial_ > 0.0) {
        Eigen::VectorXd rz = Eigen::VectorXd::Zero(ops_.bins());
        for (Eigen::Index i = 0; i < z.size(); ++i)
            if (ops_.radial_bin(i) >= 0) rz(ops_.radial_bin(i)) += z(i);
        const Eigen::VectorXd residual = rz / k_ - radial_target_;
        out.value += lambda_radial_ * residual.squaredNorm();
        for (Eigen::Index i = 0; i < z.size(); ++i)
            if (ops_.radial_bin(i) >= 0) out.gradient(i) += 2.0 * lambda_radial_ / k_ * residual(ops_.radial_bin(i));
    }
    if (lambda_projection_ > 0.0) {
        Eigen::VectorXd pz = Eigen::VectorXd::Zero(projection_target_.size());
        for (Eigen::Index i = 0; i < z.size(); ++i) pz(projection_bin_[static_cast<std::size_t>(i)]) += z(i);
        const Eigen::VectorXd residual = pz - projection_target_;
        out.value += lambda_projection_ * residual.squaredNorm();
        for (Eigen::Index i = 0; i < z.size(); ++i)
            out.gradient(i) += 2.0 * lambda_projection_ * residual(projection_bin_[static_cast<std::size_t>(i)]);
    }
    return out;
}

Indicator binarize(const Indicator& z, Eigen::Index k) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(z.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return z(a) > z(b); });
    Indicator out = Indicator::Zero(z.size());
    for (Eigen::Index i = 0; i < std::min(k, z.size()); ++i) out(order[static_cast<std::size_t>(i)]) = 1.0;
    return out;
}

RecoveryResult recover(const DistanceDistribution& p_c, const DistanceDistribution& p_mu, const GridSpec& grid,
                       Eigen::Index k, const RecoveryOptions& options) {
    const DistanceOperators ops(grid);
    return recover(p_c, p_mu, ops, k, options);
}

RecoveryResult recover(const DistanceDistribution& p_c, const DistanceDistribution& p_mu,
                       const DistanceOperators& ops, Eigen::Index k, const RecoveryOptions& options) {
    if (k < 1 || k > ops.cells()) throw std::domain_error("recover: K must lie in [1, cells]");
    if (options.restarts < 1 || options.max_iters < 1)
        throw std::invalid_argument("recover: restarts and max_iters must be positive");
    const auto kd = static_cast<double>(k);
    const DistanceAxis& bins = ops.grid().distance_bins;
    const RecoveryObjective objective(ops, rebin(p_c, bins), rebin(p_mu, bins), kd, options);

    RecoveryResult result;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index restart = 0; restart < options.restarts; ++restart) {
        Rng rng = Rng::substream(options.seed, static_cast<std::uint64_t>(restart));
        Eigen::VectorXd start(ops.cells());
        for (Eigen::Index i = 0; i < start.size(); ++i) start(i) = rng.uniform();
        Indicator z = project_constraints(start, kd);
        ObjectiveValue current = objective(z);
        std::vector<double> trace{current.value};

        RestartSummary summary;
        double step = 1.0;
        int quiet_iters = 0;
        for (Eigen::Index iter = 0; iter < options.max_iters; ++iter) {
            bool accepted = false;
            Indicator candidate;
            double candidate_value = 0.0;
            for (step = std::min(1.0, 2.0 * step); step >= 1e-16; step *= 0.5) {
                candidate = project_constraints(z - step * current.gradient, kd);
                const Eigen::VectorXd move = candidate - z;
                candidate_value = objective.value(candidate);
                const double bound =
                    current.value + current.gradient.dot(move) + move.squaredNorm() / (2.0 * step);
                if (candidate_value <= bound + 1e-12 * std::fabs(current.value)) {
                    accepted = true;
                    break;
                }
            }
            summary.iterations = iter + 1;
            if (!accepted) {
                summary.converged = true;
                break;
            }
            result.max_feasibility_violation =
                std::max(result.max_feasibility_violation, feasibility_violation(candidate, kd));
            result.max_objective_increase =
                std::max(result.max_objective_increase, candidate_value - current.value);
            const double move_size = (candidate - z).cwiseAbs().maxCoeff();
            const double decrease = (current.value - candidate_value) / std::max(1.0, std::fabs(current.value));
            z = std::move(candidate);
            current = objective(z);
            trace.push_back(current.value);
            quiet_iters = (move_size < 1e-12 || decrease < options.tolerance) ? quiet_iters + 1 : 0;
            if (quiet_iters >= 5) {
                summary.converged = true;
                break;
            }
        }
        summary.relaxed_objective = current.value;
        const Indicator binary = binarize(z, k);
        summary.objective = objective.value(binary);
        result.restarts.push_back(summary);
        if (summary.objective < best) {
            best = summary.objective;
            result.best_restart = restart;
            result.z = binary;
            result.relaxed = z;
            result.objective_trace = std::move(trace);
            result.converged = summary.converged;
        }
    }

    result.locations.resize(2, k);
    Eigen::Index col = 0;
    for (Eigen::Index i = 0; i < result.z.size(); ++i)
        if (result.z(i) == 1.0) result.locations.col(col++) = ops.grid().center(i);
    return result;
}

DistanceDistribution location_pair_distribution(const Eigen::Matrix2Xd& locations, const DistanceAxis& axis) {
    std::vector<double> values;
    for (Eigen::Index a = 0; a < locations.cols(); ++a)
        for (Eigen::Index b = a + 1; b < locations.cols(); ++b)
            values.push_back((locations.col(a) - locations.col(b)).norm());
    return true_distance_distribution(values, axis);
}

DistanceDistribution location_radial_distribution(const Eigen::Matrix2Xd& locations, const DistanceAxis& axis) {
    const Eigen::VectorXd radii = locations.colwise().norm().transpose();
    return true_distance_distribution(radii, axis);
}

std::string recovery_report_json(const RecoveryResult& result, double emd_pairwise, double emd_radial) {
    nlohmann::json j;
    j["z"] = std::vector<double>(result.z.begin(), result.z.end());
    j["locations"] = nlohmann::json::array();
    for (Eigen::Index k = 0; k < result.locations.cols(); ++k)
        j["locations"].push_back({result.locations(0, k), result.locations(1, k)});
    j["objective_trace"] = result.objective_trace;
    j["emd_pairwise"] = emd_pairwise;
    j["emd_radial"] = emd_radial;
    j["converged"] = result.converged;
    j["best_restart"] = result.best_restart;
    j["restarts"] = nlohmann::json::array();
    for (const auto& r : result.restarts)
        j["restarts"].push_back({{"objective", r.objective},
                                 {"relaxed_objective", r.relaxed_objective},
                                 {"iterations", r.iterations},
                                 {"converged", r.converged}});
    return j.dump(2);
}

}  // namespace uvt

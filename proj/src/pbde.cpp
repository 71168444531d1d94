#include "uvt/pbde.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace uvt {

namespace {

std::vector<std::complex<double>> polynomial_roots(Eigen::VectorXd coeffs) {
    // coeffs(j) multiplies z^j; drop negligible leading terms.
    const double scale = coeffs.cwiseAbs().maxCoeff();
    Eigen::Index degree = coeffs.size() - 1;
    while (degree > 0 && std::fabs(coeffs(degree)) <= 1e-14 * scale) --degree;
    if (degree < 1) return {};
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(degree, degree);
    companion.bottomLeftCorner(degree - 1, degree - 1).setIdentity();
    companion.col(degree - 1) = -coeffs.head(degree) / coeffs(degree);
    Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
    const auto& ev = solver.eigenvalues();
    return {ev.data(), ev.data() + ev.size()};
}

PronyEstimate run_window(const InvariantFeatures& features, const Eigen::VectorXd& values, Eigen::Index order,
                         double radius_bound, const PbdeOptions& options, Eigen::Index nu_min, Eigen::Index nu_max) {
    // Locate the contiguous integer window on the feature axis.
    Eigen::Index first = -1;
    for (Eigen::Index i = 0; i < features.freq_axis.size(); ++i) {
        if (features.freq_axis(i) == static_cast<double>(nu_min)) {
            first = i;
            break;
        }
    }
    const Eigen::Index length = nu_max - nu_min + 1;
    if (first < 0 || first + length > features.freq_axis.size())
        throw std::invalid_argument("PBDE: features do not cover the integer window [" + std::to_string(nu_min) +
                                    ", " + std::to_string(nu_max) + "]");
    Eigen::VectorXd signal(length);
    for (Eigen::Index i = 0; i < length; ++i) {
        const double nu = features.freq_axis(first + i);
        if (nu != static_cast<double>(nu_min + i))
            throw std::invalid_argument("PBDE: feature axis is not a contiguous integer range");
        signal(i) = std::sqrt(nu) * values(first + i);
    }

    PronyOptions prony;
    prony.modulus_tolerance = options.modulus_tolerance;
    prony.denoise_iterations = options.denoise_iterations;
    prony.real_angle_tolerance = std::numbers::pi / (4.0 * static_cast<double>(nu_max));
    prony.distance_per_radian = radius_bound / std::numbers::pi;
    PronyEstimate est = prony_frequencies(signal, order, prony);
    est.nu_min = nu_min;
    est.nu_max = nu_max;
    // Frequencies beyond the R bound cannot be distances of a valid model.
    Eigen::Index kept = 0;
    for (Eigen::Index i = 0; i < est.distances.size(); ++i) {
        if (est.distances(i) > 0.0 && est.distances(i) < radius_bound) {
            est.distances(kept) = est.distances(i);
            est.frequencies(kept) = est.frequencies(i);
            ++kept;
        }
    }
    est.distances.conservativeResize(kept);
    est.frequencies.conservativeResize(kept);
    est.missing = order - kept;
    if (kept == 0) return est;

    est.amplitudes = fit_amplitudes(signal, est.frequencies, static_cast<double>(nu_min));
    if (!options.resolve_multiplicity) return est;
    // Under unit weights each source contributes sqrt(2 / (pi a)) to the
    // rescaled feature, so the amplitude ratio estimates its multiplicity.
    const Eigen::VectorXd per_source =
        (2.0 / (std::numbers::pi * est.frequencies.array())).sqrt().matrix();
    est.multiplicities = apportion(est.amplitudes.cwiseQuotient(per_source), order);
    Eigen::VectorXd expanded(order);
    Eigen::VectorXd expanded_freq(order);
    Eigen::Index at = 0;
    for (Eigen::Index j = 0; j < kept; ++j)
        for (int c = 0; c < est.multiplicities(j); ++c) {
            expanded(at) = est.distances(j);
            expanded_freq(at) = est.frequencies(j);
            ++at;
        }
    est.distances = expanded.head(at);
    est.frequencies = expanded_freq.head(at);
    est.missing = order - at;
    return est;
}

std::pair<Eigen::Index, Eigen::Index> window_for(const InvariantFeatures& features, Eigen::Index order,
                                                 const PbdeOptions& options) {
    Eigen::Index nu_max = options.nu_max;
    if (nu_max <= 0) nu_max = static_cast<Eigen::Index>(std::floor(features.freq_axis.maxCoeff()));
    if (nu_max - options.nu_min < 4 * order)
        throw std::invalid_argument("PBDE: frequency window [" + std::to_string(options.nu_min) + ", " +
                                    std::to_string(nu_max) + "] shorter than 4 x model order");
    return {options.nu_min, nu_max};
}

}  // namespace

Eigen::VectorXd fit_amplitudes(const Eigen::VectorXd& signal, const Eigen::VectorXd& frequencies, double nu_0) {
    const Eigen::Index n = signal.size(), p = frequencies.size();
    Eigen::MatrixXd basis(n, 2 * p);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double nu = nu_0 + static_cast<double>(i);
        for (Eigen::Index j = 0; j < p; ++j) {
            basis(i, 2 * j) = std::cos(frequencies(j) * nu);
            basis(i, 2 * j + 1) = std::sin(frequencies(j) * nu);
        }
    }
    const Eigen::VectorXd coef = basis.colPivHouseholderQr().solve(signal);
    Eigen::VectorXd amp(p);
    for (Eigen::Index j = 0; j < p; ++j) amp(j) = std::hypot(coef(2 * j), coef(2 * j + 1));
    return amp;
}

Eigen::VectorXi apportion(const Eigen::VectorXd& weights, Eigen::Index total) {
    const Eigen::Index n = weights.size();
    Eigen::VectorXi out = Eigen::VectorXi::Zero(n);
    if (n == 0 || total <= 0) return out;
    const double sum = weights.sum();
    if (!(sum > 0.0)) {
        out.head(std::min(n, total)).setOnes();
        return out;
    }
    const Eigen::VectorXd quota = weights * (static_cast<double>(total) / sum);
    std::vector<std::pair<double, Eigen::Index>> remainders;
    Eigen::Index assigned = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
        out(j) = static_cast<int>(std::floor(quota(j)));
        assigned += out(j);
        remainders.emplace_back(quota(j) - std::floor(quota(j)), j);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (Eigen::Index r = 0; assigned < total; ++r, ++assigned) ++out(remainders[static_cast<std::size_t>(r % n)].second);
    return out;
}

Eigen::VectorXd cadzow_denoise(const Eigen::VectorXd& signal, Eigen::Index rank, int iterations) {
    const Eigen::Index n = signal.size();
    const Eigen::Index cols = n / 2 + 1;
    const Eigen::Index rows = n - cols + 1;
    if (rank >= std::min(rows, cols)) return signal;
    Eigen::VectorXd current = signal;
    Eigen::MatrixXd hankel(rows, cols);
    for (int iter = 0; iter < iterations; ++iter) {
        for (Eigen::Index i = 0; i < rows; ++i) hankel.row(i) = current.segment(i, cols).transpose();
        Eigen::BDCSVD<Eigen::MatrixXd> svd(hankel, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Eigen::MatrixXd low = svd.matrixU().leftCols(rank) *
                                    svd.singularValues().head(rank).asDiagonal() *
                                    svd.matrixV().leftCols(rank).transpose();
        // Average anti-diagonals back into a sequence.
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(n), count = Eigen::VectorXd::Zero(n);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) {
                sum(i + j) += low(i, j);
                count(i + j) += 1.0;
            }
        current = sum.cwiseQuotient(count);
    }
    return current;
}

PronyEstimate prony_frequencies(const Eigen::VectorXd& signal, Eigen::Index order, const PronyOptions& options) {
    if (order < 1) throw std::invalid_argument("prony_frequencies: order must be >= 1");
    const Eigen::Index taps = 2 * order + 1;
    if (signal.size() < taps) throw std::invalid_argument("prony_frequencies: signal shorter than 2*order+1");

    const Eigen::VectorXd cleaned =
        options.denoise_iterations > 0 ? cadzow_denoise(signal, taps - 1, options.denoise_iterations) : signal;
    const Eigen::Index rows = signal.size() - taps + 1;
    Eigen::MatrixXd system(rows, taps);
    for (Eigen::Index i = 0; i < rows; ++i) system.row(i) = cleaned.segment(i, taps).transpose();

    // The right singular vector of the smallest singular value is the TLS filter.
    Eigen::BDCSVD<Eigen::MatrixXd> svd(system, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const Eigen::Index rank_slots = sv.size();
    PronyEstimate est;
    Eigen::VectorXd filter = svd.matrixV().col(taps - 1);
    est.residual = rows >= taps ? sv(taps - 1) : 0.0;
    const double top = sv(0) > 0.0 ? sv(0) : 1.0;
    if (rows < taps) {
        est.rank_deficient = true;
    } else if (rank_slots >= 2 && sv(taps - 2) <= 1e-10 * top) {
        est.rank_deficient = true;
    }

    est.filter_roots = polynomial_roots(filter);
    std::vector<double> freqs;
    for (const auto& root : est.filter_roots) {
        if (std::fabs(std::abs(root) - 1.0) >= options.modulus_tolerance) continue;
        const double angle = std::arg(root);
        const double mag = std::fabs(angle);
        const double tol = std::max(options.real_angle_tolerance, 1e-9);
        if (mag < tol || std::numbers::pi - mag < tol) {
            ++est.degenerate_roots;
            continue;
        }
        if (angle > 0.0) freqs.push_back(angle);
    }
    std::sort(freqs.begin(), freqs.end());
    est.frequencies = Eigen::Map<Eigen::VectorXd>(freqs.data(), static_cast<Eigen::Index>(freqs.size()));
    est.distances = est.frequencies * options.distance_per_radian;
    est.missing = order - static_cast<Eigen::Index>(freqs.size());
    return est;
}

PronyEstimate estimate_radial_distances(const InvariantFeatures& features, Eigen::Index k, double radius_bound,
                                        const PbdeOptions& options) {
    if (k < 1) throw std::invalid_argument("estimate_radial_distances: K must be >= 1");
    const auto [lo, hi] = window_for(features, k, options);
    return run_window(features, features.mu.real(), k, radius_bound, options, lo, hi);
}

PronyEstimate estimate_pairwise_distances(const InvariantFeatures& features, Eigen::Index k, double radius_bound,
                                          const PbdeOptions& options) {
    if (k < 1) throw std::invalid_argument("estimate_pairwise_distances: K must be >= 1");
    const Eigen::Index pairs = k * (k - 1) / 2;
    if (pairs == 0) {
        PronyEstimate empty;
        empty.nu_min = options.nu_min;
        return empty;
    }
    const auto [lo, hi] = window_for(features, pairs, options);
    return run_window(features, features.c2, pairs, radius_bound, options, lo, hi);
}

}  // namespace uvt

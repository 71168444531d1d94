#include "uvt/features.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <stdexcept>

#include <unsupported/Eigen/FFT>

#include "uvt/specfun.hpp"

namespace uvt {

namespace {

// Lines with at most this many nonzeros are correlated directly.
constexpr Eigen::Index kSparseLimit = 64;

Eigen::Index fft_size(Eigen::Index bins) {
    Eigen::Index n = 1;
    while (n < 2 * bins - 1) n *= 2;
    return n;
}

}  // namespace

std::complex<double> line_dft(std::span<const double> line, double nu) {
    const auto bins = static_cast<Eigen::Index>(line.size());
    if (bins % 2 == 0) throw std::invalid_argument("line_dft: line length must be odd (2M+1)");
    const Eigen::Index half = bins / 2;
    const double omega = 2.0 * std::numbers::pi * nu / static_cast<double>(bins);
    std::complex<double> acc{0.0, 0.0};
    for (Eigen::Index u = -half; u <= half; ++u) {
        const double v = line[static_cast<std::size_t>(u + half)];
        if (v == 0.0) continue;
        const double phase = omega * static_cast<double>(u);
        acc += v * std::complex<double>(std::cos(phase), std::sin(phase));
    }
    return acc;
}

std::complex<double> LineMoments::mean_transform(double nu) const {
    return line_dft(std::span<const double>(mean_line.data(), static_cast<std::size_t>(mean_line.size())), nu);
}

double LineMoments::mean_power(double nu) const {
    const double omega = 2.0 * std::numbers::pi * nu / static_cast<double>(2 * half_bins + 1);
    double acc = 0.0;
    for (Eigen::Index lag = autocorrelation.size() - 1; lag >= 1; --lag)
        acc += autocorrelation(lag) * std::cos(omega * static_cast<double>(lag));
    return autocorrelation(0) + 2.0 * acc;
}

LineMoments line_moments(const ProjectionSet& data) {
    const Eigen::Index bins = data.bin_count();
    if (data.line_count() < 1 || data.lines.cols() != bins)
        throw std::invalid_argument("line_moments: malformed projection set");
    LineMoments out;
    out.half_bins = data.half_bins;
    out.line_count = data.line_count();
    out.mean_line = data.lines.colwise().mean().transpose();
    out.autocorrelation = Eigen::VectorXd::Zero(bins);

    const Eigen::Index n = fft_size(bins);
    Eigen::FFT<double> fft;
    fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
    std::vector<double> padded(static_cast<std::size_t>(n), 0.0);
    std::vector<std::complex<double>> spectrum;
    std::vector<double> power(static_cast<std::size_t>(n / 2 + 1), 0.0);
    bool any_dense = false;
    std::vector<Eigen::Index> support;
    for (Eigen::Index l = 0; l < data.line_count(); ++l) {
        const auto line = data.lines.row(l);
        support.clear();
        for (Eigen::Index u = 0; u < bins && static_cast<Eigen::Index>(support.size()) <= kSparseLimit; ++u)
            if (line(u) != 0.0) support.push_back(u);
        if (static_cast<Eigen::Index>(support.size()) <= kSparseLimit) {
            for (std::size_t a = 0; a < support.size(); ++a)
                for (std::size_t b = a; b < support.size(); ++b)
                    out.autocorrelation(support[b] - support[a]) += line(support[a]) * line(support[b]);
            continue;
        }
        any_dense = true;
        std::copy(line.begin(), line.end(), padded.begin());
        fft.fwd(spectrum, padded);
        for (std::size_t f = 0; f < power.size(); ++f) power[f] += std::norm(spectrum[f]);
    }
    if (any_dense) {
        std::vector<std::complex<double>> half(power.begin(), power.end());
        std::vector<double> lags;
        fft.inv(lags, half);
        for (Eigen::Index lag = 0; lag < bins; ++lag) out.autocorrelation(lag) += lags[static_cast<std::size_t>(lag)];
    }
    out.autocorrelation /= static_cast<double>(data.line_count());
    return out;
}

InvariantFeatures estimate_features(const LineMoments& moments, double noise_variance, Eigen::Index k,
                                    const Eigen::VectorXd& freq_axis) {
    if (k < 1) throw std::invalid_argument("estimate_features: K must be >= 1");
    InvariantFeatures out;
    out.freq_axis = freq_axis;
    out.k_assumed = k;
    out.line_count = moments.line_count;
    out.noise_variance_used = noise_variance;
    out.aliased_frequencies = (freq_axis.array().abs() > static_cast<double>(moments.half_bins)).count();
    out.mu.resize(freq_axis.size());
    out.c2.resize(freq_axis.size());
    const double noise_power = static_cast<double>(2 * moments.half_bins + 1) * noise_variance;
    for (Eigen::Index i = 0; i < freq_axis.size(); ++i) {
        out.mu(i) = moments.mean_transform(freq_axis(i));
        out.c2(i) = (moments.mean_power(freq_axis(i)) - noise_power - static_cast<double>(k)) / 2.0;
    }
    return out;
}

InvariantFeatures estimate_features(const ProjectionSet& data, Eigen::Index k, const Eigen::VectorXd& freq_axis,
                                    std::optional<double> sigma2_override) {
    if (k < 1) throw std::invalid_argument("estimate_features: K must be >= 1");
    return estimate_features(line_moments(data), sigma2_override.value_or(data.noise_variance), k, freq_axis);
}

InvariantFeatures analytic_features(const PointSourceModel& model, const Eigen::VectorXd& freq_axis) {
    InvariantFeatures out;
    out.freq_axis = freq_axis;
    out.k_assumed = model.size();
    const Eigen::VectorXd radii = radial_distances(model);
    const Eigen::MatrixXd dist = pairwise_distances(model);
    const auto& w = model.weights();
    const double scale = std::numbers::pi / model.radius_bound();
    out.mu = Eigen::VectorXcd::Zero(freq_axis.size());
    out.c2 = Eigen::VectorXd::Zero(freq_axis.size());
    for (Eigen::Index i = 0; i < freq_axis.size(); ++i) {
        const double nu = freq_axis(i);
        double mu = 0.0, c2 = 0.0;
        for (Eigen::Index a = 0; a < model.size(); ++a) {
            mu += w(a) * bessel_j0(scale * radii(a) * nu);
            for (Eigen::Index b = a + 1; b < model.size(); ++b) c2 += w(a) * w(b) * bessel_j0(scale * dist(a, b) * nu);
        }
        out.mu(i) = mu;
        out.c2(i) = c2;
    }
    return out;
}

Eigen::VectorXd integer_axis(Eigen::Index lo, Eigen::Index hi) {
    if (hi < lo) throw std::invalid_argument("integer_axis: empty range");
    return Eigen::VectorXd::LinSpaced(hi - lo + 1, static_cast<double>(lo), static_cast<double>(hi));
}

void write_features_csv(const InvariantFeatures& estimated, const InvariantFeatures* analytic,
                        const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << std::setprecision(17) << "nu,re_mu,im_mu,c2";
    if (analytic) out << ",analytic_mu,analytic_c";
    out << '\n';
    for (Eigen::Index i = 0; i < estimated.freq_axis.size(); ++i) {
        out << estimated.freq_axis(i) << ',' << estimated.mu(i).real() << ',' << estimated.mu(i).imag() << ','
            << estimated.c2(i);
        if (analytic) out << ',' << analytic->mu(i).real() << ',' << analytic->c2(i);
        out << '\n';
    }
}

}  // namespace uvt

#include "uvt/projector.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <stdexcept>

#include "uvt/rng.hpp"

namespace uvt {

namespace {

constexpr std::uint64_t kAngleStream = 1;
constexpr std::uint64_t kNoiseStream = 2;
constexpr std::array<char, 8> kMagic{'B', 'T', 'P', 'J', '1', '\0', '\0', '\0'};

template <typename T>
void put_le(std::ostream& out, T value) {
    auto bits = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
    if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
    out.write(reinterpret_cast<const char*>(bits.data()), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
    std::array<unsigned char, sizeof(T)> bits{};
    in.read(reinterpret_cast<char*>(bits.data()), sizeof(T));
    if (!in) throw std::runtime_error("projection file truncated");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
    return std::bit_cast<T>(bits);
}

void add_projection(const PointSourceModel& model, double theta, Eigen::Index half_bins,
                    Eigen::Ref<Eigen::RowVectorXd> out, Eigen::Index* clamped) {
    const double delta = bin_width(model.radius_bound(), half_bins);
    const double c = std::cos(theta), s = std::sin(theta);
    const auto& pts = model.points();
    for (Eigen::Index k = 0; k < model.size(); ++k) {
        const double coord = (pts(1, k) * c - pts(0, k) * s) / delta;
        double u = std::floor(coord + 0.5);
        if (u < -static_cast<double>(half_bins) || u > static_cast<double>(half_bins)) {
            u = std::clamp(u, -static_cast<double>(half_bins), static_cast<double>(half_bins));
            if (clamped) ++*clamped;
        }
        out(static_cast<Eigen::Index>(u) + half_bins) += model.weights()(k);
    }
}

}  // namespace

Eigen::VectorXd project_line(const PointSourceModel& model, double theta, Eigen::Index half_bins,
                             Eigen::Index* clamped) {
    if (half_bins < 1) throw std::invalid_argument("project_line: M must be >= 1");
    Eigen::RowVectorXd line = Eigen::RowVectorXd::Zero(2 * half_bins + 1);
    add_projection(model, theta, half_bins, line, clamped);
    return line.transpose();
}

ProjectionSet simulate(const PointSourceModel& model, const SimulationConfig& config) {
    if (config.lines < 1) throw std::invalid_argument("simulate: L must be >= 1");
    if (config.half_bins < 1) throw std::invalid_argument("simulate: M must be >= 1");
    if (!(config.snr > 0.0)) throw std::invalid_argument("simulate: SNR must be positive or infinite");

    ProjectionSet data;
    data.half_bins = config.half_bins;
    data.radius_bound = model.radius_bound();
    data.lines = RowMatrixXd::Zero(config.lines, 2 * config.half_bins + 1);
    data.angles.resize(config.lines);
    for (Eigen::Index l = 0; l < config.lines; ++l) {
        Rng rng = Rng::substream(config.seed, static_cast<std::uint64_t>(l), kAngleStream);
        data.angles(l) = 2.0 * std::numbers::pi * rng.uniform();
        add_projection(model, data.angles(l), config.half_bins, data.lines.row(l), &data.clamped_points);
    }

    if (std::isinf(config.snr)) return data;

    const double mean_power = data.lines.squaredNorm() / static_cast<double>(data.lines.size());
    data.noise_variance = mean_power / config.snr;
    const double sigma = std::sqrt(data.noise_variance);
    const std::uint64_t noise_seed = config.noise_seed.value_or(config.seed);
    for (Eigen::Index l = 0; l < config.lines; ++l) {
        Rng rng = Rng::substream(noise_seed, static_cast<std::uint64_t>(l), kNoiseStream);
        auto row = data.lines.row(l);
        for (Eigen::Index u = 0; u < row.size(); ++u) row(u) += sigma * rng.normal();
    }
    return data;
}

void write_projection_binary(const ProjectionSet& data, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write(kMagic.data(), kMagic.size());
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(data.line_count()));
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(data.half_bins));
    put_le<double>(out, data.radius_bound);
    put_le<double>(out, data.noise_variance);
    for (Eigen::Index l = 0; l < data.lines.rows(); ++l)
        for (Eigen::Index u = 0; u < data.lines.cols(); ++u) put_le<double>(out, data.lines(l, u));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

ProjectionSet read_projection_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::array<char, 8> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kMagic) throw std::runtime_error(path.string() + ": not a BTPJ1 projection file");
    ProjectionSet data;
    const auto lines = get_le<std::uint64_t>(in);
    data.half_bins = static_cast<Eigen::Index>(get_le<std::uint64_t>(in));
    data.radius_bound = get_le<double>(in);
    data.noise_variance = get_le<double>(in);
    if (data.half_bins < 1 || lines < 1) throw std::runtime_error(path.string() + ": invalid header");
    data.lines.resize(static_cast<Eigen::Index>(lines), data.bin_count());
    for (Eigen::Index l = 0; l < data.lines.rows(); ++l)
        for (Eigen::Index u = 0; u < data.lines.cols(); ++u) data.lines(l, u) = get_le<double>(in);
    return data;
}

void write_projection_csv(const ProjectionSet& data, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << std::setprecision(17);
    for (Eigen::Index l = 0; l < data.lines.rows(); ++l) {
        for (Eigen::Index u = 0; u < data.lines.cols(); ++u) {
            if (u) out << ',';
            out << data.lines(l, u);
        }
        out << '\n';
    }
}

}  // namespace uvt

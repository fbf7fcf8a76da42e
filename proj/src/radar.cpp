#include "rcisar/radar.hpp"

#include <cstring>
#include <fstream>

namespace rcisar {

void RadarConfig::validate() const {
    if (fc <= 0 || beta <= 0 || t_pri <= 0 || t_cpi <= 0 || fs <= 0)
        throw ConfigError("radar config: rates and intervals must be positive");
    if (baseline <= 0) throw ConfigError("radar config: baseline must be positive");
    if (n_channels < 1 || n_channels > 2)
        throw ConfigError("radar config: n_channels must be 1 or 2");
    const double pulses = t_cpi / t_pri;
    if (std::abs(pulses - std::lround(pulses)) > 1e-6)
        throw ConfigError("radar config: T_CPI must be an integer multiple of T_PRI");
    if (std::abs(n_fast - fs * t_pri) > 1e-6 * n_fast)
        throw ConfigError("radar config: n_fast must equal fs * T_PRI (chirp fills the PRI)");
    if (pd < 0 || pd > 1) throw ConfigError("radar config: pd must be in [0,1]");
    if (noise_power < 0) throw ConfigError("radar config: noise power must be >= 0");
}

double crossrange_resolution(double wavelength, double omega, double t_cpi) {
    if (omega == 0.0) throw std::invalid_argument("crossrange resolution undefined at omega=0");
    return wavelength / (2.0 * std::abs(omega) * t_cpi);
}

bool SectorRegion::contains(const Vector2d& p) const {
    const Vector2d d = p - origin;
    const double r = d.norm();
    if (r < r_min || r > r_max) return false;
    const double bearing = std::atan2(d.y(), d.x());
    return std::abs(wrap_pi(bearing - boresight)) <= half_width;
}

ClutterField spawn_clutter(const ClutterParams& params, const SectorRegion& region, Rng& rng) {
    if (region.r_max <= region.r_min || region.half_width <= 0)
        throw std::invalid_argument("clutter region is empty");
    ClutterField field;
    const int count = rng.binomial(params.n, params.p);
    field.points.reserve(count);
    for (int i = 0; i < count; ++i) {
        // uniform over the annular sector area: r ~ sqrt-uniform, angle uniform
        const double u = rng.uniform();
        const double r = std::sqrt(region.r_min * region.r_min +
                                   u * (region.r_max * region.r_max - region.r_min * region.r_min));
        const double a = region.boresight + rng.uniform(-region.half_width, region.half_width);
        ClutterPoint cp;
        cp.position = {region.origin.x() + r * std::cos(a), region.origin.y() + r * std::sin(a),
                       params.z};
        cp.amplitude = params.amplitude;
        field.points.push_back(cp);
    }
    return field;
}

namespace {

struct Emitter {
    double r0;        // range at CPI start
    double vr;        // radial velocity
    double sin_el;    // elevation sine w.r.t. receiver 1
    double amplitude;
};

void add_emitter(CubeMatrix& ch, const RadarConfig& cfg, const Emitter& e, int channel) {
    const int n_pulses = ch.rows();
    const int n_fast = ch.cols();
    const double dt = 1.0 / cfg.fs;
    const double chan_path = (channel == 1) ? -cfg.baseline * e.sin_el : 0.0;

    for (int p = 0; p < n_pulses; ++p) {
        const double t_slow = p * cfg.t_pri;
        const double tau_b = (2.0 * (e.r0 + e.vr * t_slow) + chan_path) / kSpeedOfLight;
        const cd carrier = std::polar(e.amplitude, -2.0 * kPi * cfg.fc * tau_b);
        const int n0 = std::max(0, static_cast<int>(std::ceil(tau_b * cfg.fs - 1e-12)));
        if (n0 >= n_fast) continue;
        // quadratic phase pi*beta*(tau - tau_b)^2 via a two-term recurrence;
        // explicit real/imag arithmetic keeps this loop out of __muldc3
        const double u0 = n0 * dt - tau_b;
        const cd z0 = std::polar(1.0, kPi * cfg.beta * u0 * u0);
        const cd w0 = std::polar(1.0, kPi * cfg.beta * (2.0 * u0 * dt + dt * dt));
        const cd w2 = std::polar(1.0, 2.0 * kPi * cfg.beta * dt * dt);
        const double cr = carrier.real(), ci = carrier.imag();
        const double w2r = w2.real(), w2i = w2.imag();
        double zr = z0.real(), zi = z0.imag();
        double wr = w0.real(), wi = w0.imag();
        auto* row = reinterpret_cast<double*>(ch.data() + static_cast<size_t>(p) * n_fast);
        for (int n = n0; n < n_fast; ++n) {
            row[2 * n] += cr * zr - ci * zi;
            row[2 * n + 1] += cr * zi + ci * zr;
            const double nzr = zr * wr - zi * wi;
            const double nzi = zr * wi + zi * wr;
            zr = nzr;
            zi = nzi;
            const double nwr = wr * w2r - wi * w2i;
            const double nwi = wr * w2i + wi * w2r;
            wr = nwr;
            wi = nwi;
        }
    }
}

}  // namespace

RadarCube synthesize_cpi(const RadarConfig& config, const std::vector<Scatterer>& scatterers,
                         const ClutterField& clutter, const Vector3d& radar_pos, uint64_t seed,
                         int cpi_index) {
    config.validate();
    const int n_pulses = config.n_pulses();
    const double max_range = kSpeedOfLight * config.t_pri / 2.0;

    // Per-CPI Bernoulli(pd) gate, drawn in scatterer order from its own stream.
    Rng det_rng(derive_seed(seed, "radar.pd"));
    std::vector<Emitter> emitters;
    emitters.reserve(scatterers.size() + clutter.points.size());
    for (size_t b = 0; b < scatterers.size(); ++b) {
        const auto& s = scatterers[b];
        const bool detected = det_rng.bernoulli(config.pd);
        if (!s.visible || s.amplitude <= 0.0 || !detected) continue;
        const Vector3d rel = s.position - radar_pos;
        const double r = rel.norm();
        if (r >= max_range)
            throw std::invalid_argument("scatterer " + std::to_string(b) +
                                        " violates the range ambiguity bound c*T_PRI/2");
        Emitter e;
        e.r0 = r;
        e.vr = s.radial_velocity;
        e.sin_el = rel.z() / r;
        e.amplitude = s.amplitude * std::sqrt(config.tx_power);
        if (config.range_spreading) {
            const double g = config.reference_range / r;
            e.amplitude *= g * g;
        }
        emitters.push_back(e);
    }
    for (const auto& cp : clutter.points) {
        const Vector3d rel = cp.position - radar_pos;
        const double r = rel.norm();
        if (r >= max_range)
            throw std::invalid_argument("clutter point violates the range ambiguity bound");
        Emitter e;
        e.r0 = r;
        e.vr = 0.0;
        e.sin_el = rel.z() / r;
        e.amplitude = cp.amplitude * std::sqrt(config.tx_power);
        if (config.range_spreading) {
            const double g = config.reference_range / r;
            e.amplitude *= g * g;
        }
        if (e.amplitude > 0.0) emitters.push_back(e);
    }

    RadarCube cube;
    cube.config = config;
    cube.cpi_index = cpi_index;
    cube.channels.resize(config.n_channels);
    for (int ch = 0; ch < config.n_channels; ++ch) {
        cube.channels[ch] = CubeMatrix::Zero(n_pulses, config.n_fast);
        for (const auto& e : emitters) add_emitter(cube.channels[ch], config, e, ch);
        if (config.noise_power > 0.0) {
            Rng noise_rng(derive_seed(seed, "radar.noise", static_cast<uint64_t>(ch)));
            auto& m = cube.channels[ch];
            for (int p = 0; p < n_pulses; ++p)
                for (int n = 0; n < config.n_fast; ++n)
                    m(p, n) += noise_rng.circular_gaussian(config.noise_power);
        }
    }
    return cube;
}

// ---------------------------------------------------------------------------
// Cube file format: little-endian header + interleaved complex float64.
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'R', 'C', 'U', 'B'};
constexpr uint32_t kVersion = 1;

struct CubeHeader {
    char magic[4];
    uint32_t version;
    uint32_t n_channels, n_pulses, n_fast, cpi_index;
    double fc, beta, t_pri, t_cpi, fs, baseline, tx_power, noise_power;
    double instrumented_range, frame_interval, pd, pfa, reference_range;
    uint32_t range_spreading;
    uint64_t config_hash;
};

uint64_t header_hash(const CubeHeader& h) {
    // FNV-1a over the header bytes up to (not including) the hash field
    const auto* bytes = reinterpret_cast<const unsigned char*>(&h);
    const size_t n = offsetof(CubeHeader, config_hash);
    uint64_t acc = 1469598103934665603ull;
    for (size_t i = 0; i < n; ++i) {
        acc ^= bytes[i];
        acc *= 1099511628211ull;
    }
    return acc;
}

}  // namespace

void write_cube(const std::filesystem::path& path, const RadarCube& cube) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open cube file for writing: " + path.string());
    CubeHeader h{};
    std::memcpy(h.magic, kMagic, 4);
    h.version = kVersion;
    h.n_channels = static_cast<uint32_t>(cube.channels.size());
    h.n_pulses = cube.channels.empty() ? 0 : static_cast<uint32_t>(cube.channels[0].rows());
    h.n_fast = cube.channels.empty() ? 0 : static_cast<uint32_t>(cube.channels[0].cols());
    h.cpi_index = static_cast<uint32_t>(cube.cpi_index);
    const auto& c = cube.config;
    h.fc = c.fc;
    h.beta = c.beta;
    h.t_pri = c.t_pri;
    h.t_cpi = c.t_cpi;
    h.fs = c.fs;
    h.baseline = c.baseline;
    h.tx_power = c.tx_power;
    h.noise_power = c.noise_power;
    h.instrumented_range = c.instrumented_range;
    h.frame_interval = c.frame_interval;
    h.pd = c.pd;
    h.pfa = c.pfa;
    h.reference_range = c.reference_range;
    h.range_spreading = c.range_spreading ? 1 : 0;
    h.config_hash = header_hash(h);
    f.write(reinterpret_cast<const char*>(&h), sizeof(h));
    for (const auto& m : cube.channels) {
        for (int p = 0; p < m.rows(); ++p) {
            for (int n = 0; n < m.cols(); ++n) {
                const double re = m(p, n).real(), im = m(p, n).imag();
                f.write(reinterpret_cast<const char*>(&re), 8);
                f.write(reinterpret_cast<const char*>(&im), 8);
            }
        }
    }
    if (!f) throw std::runtime_error("short write on cube file: " + path.string());
}

RadarCube read_cube(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary | std::ios::ate);
    if (!f) throw CubeFormatError("cannot open cube file: " + path.string());
    const auto file_size = static_cast<uint64_t>(f.tellg());
    f.seekg(0);
    CubeHeader h{};
    if (file_size < sizeof(h))
        throw CubeTruncationError("cube header truncated: expected " +
                                  std::to_string(sizeof(h)) + " bytes, got " +
                                  std::to_string(file_size));
    f.read(reinterpret_cast<char*>(&h), sizeof(h));
    if (std::memcmp(h.magic, kMagic, 4) != 0) throw CubeFormatError("bad cube magic");
    if (h.version != kVersion)
        throw CubeVersionError("unsupported cube version " + std::to_string(h.version));
    if (h.config_hash != header_hash(h)) throw CubeFormatError("cube header hash mismatch");
    if (h.n_channels < 1 || h.n_channels > 2 || h.n_pulses == 0 || h.n_fast == 0 ||
        h.n_pulses > (1u << 20) || h.n_fast > (1u << 20))
        throw CubeDimensionError("cube dimensions out of range");
    const uint64_t payload =
        16ull * h.n_channels * h.n_pulses * h.n_fast;  // 2 doubles per sample
    const uint64_t expected = sizeof(h) + payload;
    if (file_size != expected)
        throw CubeTruncationError("cube payload truncated: expected " + std::to_string(expected) +
                                  " bytes, got " + std::to_string(file_size));

    RadarCube cube;
    cube.cpi_index = static_cast<int>(h.cpi_index);
    auto& c = cube.config;
    c.fc = h.fc;
    c.beta = h.beta;
    c.t_pri = h.t_pri;
    c.t_cpi = h.t_cpi;
    c.fs = h.fs;
    c.n_fast = static_cast<int>(h.n_fast);
    c.n_channels = static_cast<int>(h.n_channels);
    c.baseline = h.baseline;
    c.tx_power = h.tx_power;
    c.noise_power = h.noise_power;
    c.instrumented_range = h.instrumented_range;
    c.frame_interval = h.frame_interval;
    c.pd = h.pd;
    c.pfa = h.pfa;
    c.reference_range = h.reference_range;
    c.range_spreading = h.range_spreading != 0;
    cube.channels.resize(h.n_channels);
    for (auto& m : cube.channels) {
        m.resize(h.n_pulses, h.n_fast);
        for (uint32_t p = 0; p < h.n_pulses; ++p) {
            for (uint32_t n = 0; n < h.n_fast; ++n) {
                double re, im;
                f.read(reinterpret_cast<char*>(&re), 8);
                f.read(reinterpret_cast<char*>(&im), 8);
                m(p, n) = {re, im};
            }
        }
    }
    if (!f) throw CubeTruncationError("cube payload read failed");
    return cube;
}

}  // namespace rcisar

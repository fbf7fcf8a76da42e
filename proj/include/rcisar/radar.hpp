#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <vector>

#include "rcisar/common.hpp"
#include "rcisar/rng.hpp"
#include "rcisar/scene.hpp"

namespace rcisar {

// Dual-channel FMCW synthesis. The transmitter and receiver 1 share the radar
// phase center; receiver 2 is displaced by the baseline d along z. Channel
// delays use the far-field form tau_i = 2 r_b(t)/c - (i-1) d sin(theta_b)/c,
// so positive elevation shortens the path to the upper receiver.

struct RadarConfig {
    double fc = 77e9;        // carrier [Hz]
    double beta = 60e12;     // chirp rate [Hz/s]
    double t_pri = 25e-6;    // chirp fills the PRI
    double t_cpi = 3.2e-3;   // slow-time dwell per frame
    double fs = 20.48e6;     // fast-time sample rate
    int n_fast = 512;        // samples per pulse (= fs * t_pri)
    int n_channels = 2;
    double baseline = 0.5 * kSpeedOfLight / 77e9;  // d, default lambda/2
    double tx_power = 1.0;
    double noise_power = 0.0;  // sigma_eta^2 per complex sample
    double pd = 0.9;           // per-scatterer detection probability
    double pfa = 1e-6;         // CFAR false-alarm setting carried with the sensor
    double instrumented_range = 40.0;
    double frame_interval = 0.1;   // CPI timestamp spacing (EKF update interval)
    bool range_spreading = true;   // amplitude scaled by (reference_range/r)^2
    double reference_range = 25.0;

    double lambda() const { return kSpeedOfLight / fc; }
    double bandwidth() const { return beta * t_pri; }
    double prf() const { return 1.0 / t_pri; }
    int n_pulses() const { return static_cast<int>(std::lround(t_cpi / t_pri)); }
    double range_resolution() const { return kSpeedOfLight / (2.0 * bandwidth()); }
    double doppler_resolution() const { return 1.0 / t_cpi; }

    void validate() const;
};

/// Crossrange resolution lambda / (2 omega T_cpi) of the small-angle DFT image.
double crossrange_resolution(double wavelength, double omega, double t_cpi);

/// Pulse-major storage: row = pulse (slow time), col = fast-time sample.
using CubeMatrix = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct RadarCube {
    std::vector<CubeMatrix> channels;  // each n_pulses x n_fast
    RadarConfig config;
    int cpi_index = 0;
};

struct ClutterParams {
    int n = 0;        // binomial count parameter
    double p = 0.0;   // binomial probability
    double amplitude = 0.0;  // per-point reflectivity amplitude
    double z = 0.0;          // clutter height above ground
    double min_range = 5.0;  // inner edge of the spawning annulus [m]
};

/// Angular sector (radar coverage) used as the clutter spawning region.
struct SectorRegion {
    Vector2d origin{0, 0};
    double boresight = 0.0;       // [rad]
    double half_width = kPi / 3;  // [rad]
    double r_min = 1.0, r_max = 40.0;

    bool contains(const Vector2d& p) const;
};

struct ClutterPoint {
    Vector3d position;
    double amplitude = 0.0;
};

struct ClutterField {
    std::vector<ClutterPoint> points;
};

/// Count ~ Binomial(n, p); positions i.i.d. uniform over the sector by area.
ClutterField spawn_clutter(const ClutterParams& params, const SectorRegion& region, Rng& rng);

/// One CPI of the down-converted received signal: every visible scatterer that
/// survives the per-CPI Bernoulli(pd) gate contributes a delayed chirp with
/// carrier phase -2 pi fc tau_b(t); clutter enters unconditionally at zero
/// velocity; complex white Gaussian noise of power noise_power is added last.
RadarCube synthesize_cpi(const RadarConfig& config, const std::vector<Scatterer>& scatterers,
                         const ClutterField& clutter, const Vector3d& radar_pos, uint64_t seed,
                         int cpi_index = 0);

// Flat binary cube format, shared by the writer and the ingestion path.
struct CubeFormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CubeVersionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CubeTruncationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CubeDimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void write_cube(const std::filesystem::path& path, const RadarCube& cube);
RadarCube read_cube(const std::filesystem::path& path);

}  // namespace rcisar

#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "rcisar/common.hpp"
#include "rcisar/radar.hpp"

namespace rcisar {

// Receive-side chain: translational motion compensation, stretch processing,
// 2D-DFT range/Doppler imaging, differential interferogram, OS-CFAR and
// centroid clustering.
//
// Conventions (fixed by the oracle tests):
//  * both DFT axes use the e^{+j2pi} kernel, so a receding scatterer lands at
//    positive Doppler f_D = (2 fc / c) * rdot;
//  * the range axis is r = R_ref + c f_fast / (2 beta), increasing with bin;
//  * the crossrange map is rho = -lambda f_D / (2 omega), which makes the
//    image coordinate equal to the physical cross-line-of-sight offset.

struct StretchConfig {
    double r_ref = 25.0;   // reference range [m]
    double t_ref = 25e-6;  // reference pulse duration, >= T_PRI
    int nfft_fast = 0;     // 0 = data size
    int nfft_slow = 0;
    bool hann_window = false;

    void validate(const RadarConfig& rc) const;
};

struct IsarImage {
    Eigen::MatrixXcd data;            // rows = Doppler bins, cols = range bins
    std::vector<double> range_axis;   // [m]
    std::vector<double> doppler_axis; // [Hz]
    std::vector<double> crossrange_axis;  // [m]; filled only when omega given
    bool has_crossrange = false;
    double omega = 0.0;  // rotation rate used for the crossrange map
    int cpi_index = 0;
    int channel = 0;

    int rows() const { return static_cast<int>(data.rows()); }
    int cols() const { return static_cast<int>(data.cols()); }
    double power(int r, int c) const { return std::norm(data(r, c)); }
    double total_power() const { return data.squaredNorm(); }
};

/// Slow-time phase multiply exp(+j 2 pi * 2 (r0 + vr t) / lambda); fast-time
/// content untouched.
RadarCube motion_compensate(const RadarCube& cube, double r0, double vr);

/// Element-wise multiply of every pulse with the conjugate reference chirp.
RadarCube stretch_process(const RadarCube& cube, const StretchConfig& cfg);

/// Motion compensation and stretch processing fused into one pass.
RadarCube compensate_and_stretch(const RadarCube& cube, const StretchConfig& cfg, double r0,
                                 double vr);

/// Accept the CPI for ISAR imaging only when the rotation estimate supports a
/// useful crossrange resolution.
bool image_gate(double omega_estimate, double threshold = 0.01);

/// 2D DFT of a stretch-processed cube. If omega is given the Doppler axis is
/// additionally mapped to crossrange; sub-threshold omega raises GatingError.
IsarImage form_image(const RadarCube& stretched, const StretchConfig& cfg, int channel,
                     std::optional<double> omega = std::nullopt,
                     double gate_threshold = 0.01);

struct Interferogram {
    Eigen::MatrixXd elevation;                         // [rad]
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> valid;
    int clipped_bins = 0;  // |asin argument| > 1 after unwrapping

    int rows() const { return static_cast<int>(elevation.rows()); }
    int cols() const { return static_cast<int>(elevation.cols()); }
};

/// Per-bin elevation Theta = asin(lambda * (arg chi2 - arg chi1) / (2 pi d)).
/// Bins below the magnitude gate (relative to the image noise floor) are
/// masked; the phase difference is unwrapped along range within valid spans.
Interferogram interferogram(const IsarImage& ch1, const IsarImage& ch2, double wavelength,
                            double baseline, double gate_db = 10.0);

struct Detection {
    int row = 0, col = 0;
    double power = 0.0;
};

/// Threshold multiplier alpha solving the OS-CFAR false-alarm equation
/// pfa = prod_{i=0}^{k-1} (N - i) / (N - i + alpha) for exponential noise.
double os_cfar_alpha(double pfa, int n_train, int rank);

/// 2D ordered-statistic CFAR on |chi|^2 with a square training ring
/// (train_per_side cells beyond guard_per_side on each side, cyclic edges).
/// rank <= 0 selects floor(0.75 * N_train).
std::vector<Detection> os_cfar_detect(const IsarImage& img, double pfa, int train_per_side = 8,
                                      int guard_per_side = 2, int rank = 0);

struct RadarMeasurement {
    double range_m = 0.0;
    double doppler_hz = 0.0;
    std::optional<double> elevation_rad;
    int cluster_size = 0;
    int cpi_index = 0;
};

/// Single-linkage clustering of the detections (Chebyshev bin distance <=
/// link_distance); the largest cluster becomes the measurement with a
/// power-weighted (range, Doppler) centroid and power-weighted elevation over
/// valid interferogram bins. Empty input yields nullopt.
std::optional<RadarMeasurement> cluster_to_measurement(
    const std::vector<Detection>& detections, const IsarImage& img,
    const Interferogram* interf = nullptr, int link_distance = 3);

/// All clusters as candidate measurements, largest first (clutter can out-
/// count the target; the tracker's gate arbitrates).
std::vector<RadarMeasurement> clusters_to_measurements(
    const std::vector<Detection>& detections, const IsarImage& img,
    const Interferogram* interf = nullptr, int link_distance = 3, int max_clusters = 12);

}  // namespace rcisar

#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "rcisar/common.hpp"
#include "rcisar/isar.hpp"

namespace rcisar {

struct SsimConfig {
    int window = 8;        // uniform square window, slid with stride 1
    double k1 = 0.01, k2 = 0.03;
    double dynamic_range = 40.0;  // images live on a [0, L] dB scale

    void validate() const;
};

/// Mean windowed SSIM between two equal-size images.
double ssim(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const SsimConfig& cfg = {});

/// dB magnitude of a complex image, clipped floor_db below the peak and
/// shifted to [0, floor_db].
Eigen::MatrixXd to_db_magnitude(const Eigen::MatrixXcd& img, double floor_db = 40.0);

/// Same conversion starting from a non-negative power image.
Eigen::MatrixXd to_db_power(const Eigen::MatrixXd& power, double floor_db = 40.0);

/// Shannon entropy (nats) of the normalized power distribution over bins.
/// Throws on an all-zero image.
double image_entropy(const Eigen::MatrixXcd& img);
double image_entropy_power(const Eigen::MatrixXd& power);

/// Resample an ISAR image onto a fixed metric grid (rows: crossrange in
/// [-cross_halfspan, +cross_halfspan], cols: range in range_center +-
/// range_halfspan), bilinear in the power domain, zero outside coverage.
/// Requires a crossrange-mapped image.
Eigen::MatrixXd regrid_metric(const IsarImage& img, double range_center, double range_halfspan,
                              double cross_halfspan, int out_rows, int out_cols);

struct TrajectoryReport {
    std::string name;
    int frames = 0;
    int gt_images = 0;
    int fused_images = 0;
    int ssim_frames = 0;
    double mean_ssim = 0.0;  // defined only when ssim_frames > 0
    double rmse_x = 0.0, rmse_y = 0.0, rmse_pos = 0.0, rmse_omega = 0.0;
    bool ssim_defined = false;
};

struct FrameImageDecision {
    bool gt_image = false;
    bool fused_image = false;
    std::optional<double> ssim;  // present when both images exist
};

struct TrackErrorSample {
    double ex = 0, ey = 0, eomega = 0;
};

/// Table-style aggregation: image counts under the ground-truth and fused
/// gates, mean SSIM over frames where both images exist, track RMSE.
TrajectoryReport tabulate_run(const std::string& name,
                              const std::vector<FrameImageDecision>& decisions,
                              const std::vector<TrackErrorSample>& errors);

std::string report_to_text(const std::vector<TrajectoryReport>& rows);
std::string report_to_csv(const std::vector<TrajectoryReport>& rows);

}  // namespace rcisar

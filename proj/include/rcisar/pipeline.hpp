#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rcisar/config.hpp"

namespace rcisar {

struct FrameLog {
    int k = 0;
    double t = 0;
    TargetState gt;
    std::optional<RadarMeasurement> radar_meas;  // clustered, pre-gate
    int camera_detections = 0;
    TrackRecord track;
    CompensationParams gt_comp;
    CompensationParams fused_comp;  // what the ISAR chain used this frame
    bool gt_image = false;
    bool fused_image = false;
    std::optional<double> ssim_value;
    std::optional<double> entropy_fused;
    std::optional<double> entropy_uncompensated;
};

struct RunResult {
    std::vector<FrameLog> frames;
    TrajectoryReport report;
    int init_frame = -1;  // first frame with an initialized track
};

/// Runs the full per-CPI pipeline: scene -> radar + camera synthesis -> ISAR
/// measurement chain -> fusion -> gated ISAR products -> metrics. When
/// out_dir is non-empty, all logs (and images, when enabled) are written
/// there. Identical config + seed give byte-identical outputs.
RunResult run_scenario(const ScenarioConfig& cfg, const std::filesystem::path& out_dir = {});

/// Track-quality summary used by the sweeps; frames before settle_frames
/// after initialization are excluded.
struct TrackRmse {
    double x = 0, y = 0, pos = 0, omega = 0;
    int samples = 0;
};
TrackRmse track_rmse(const RunResult& run, int settle_frames = 10);

struct SweepPoint {
    double camera_pd = 0, radar_pd = 0, radar_pfa = 0;
    TrackRmse rmse;
    int seeds = 0;
};

std::vector<SweepPoint> run_camera_sweep(const ScenarioConfig& base,
                                         const std::vector<double>& camera_pds, int n_seeds);
std::vector<SweepPoint> run_radar_sweep(const ScenarioConfig& base,
                                        const std::vector<std::pair<double, double>>& pd_pfa,
                                        int n_seeds);
std::string sweep_to_text(const std::vector<SweepPoint>& points, bool camera_sweep);

/// Ingestion path for externally recorded cubes (same format the writer
/// emits).
RadarCube ingest_cube(const std::filesystem::path& path);

/// 16-bit binary PGM of a [0, span] dB image; axis metadata goes into header
/// comments, and a sibling .axes.csv carries the axis vectors.
void write_pgm16(const std::filesystem::path& path, const Eigen::MatrixXd& db_image,
                 double span_db, const std::vector<std::string>& comments);
void write_image_artifacts(const std::filesystem::path& base_path, const IsarImage& img,
                           double floor_db = 40.0);

}  // namespace rcisar

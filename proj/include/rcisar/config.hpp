#pragma once

#include <filesystem>
#include <string>

#include "rcisar/camera.hpp"
#include "rcisar/fusion.hpp"
#include "rcisar/isar.hpp"
#include "rcisar/metrics.hpp"
#include "rcisar/radar.hpp"
#include "rcisar/scene.hpp"

namespace rcisar {

// Full experiment description. Serialized as plain text, one dotted key per
// line; the file carries a version field and readers reject unknown versions
// and unknown keys.

struct CfarSettings {
    int train_per_side = 8;
    int guard_per_side = 2;
    int rank = 0;  // 0 = floor(0.75 N)
    int link_distance = 3;
};

struct ImageSettings {
    double gate_omega = 0.01;     // rad/s
    double cross_halfspan = 8.0;  // metric SSIM grid [m]
    double range_halfspan = 8.0;
    int grid_rows = 160;
    int grid_cols = 160;
};

struct FusionSettings {
    double sigma_a = 2.0;
    double sigma_alpha = 8.0;
    double sigma_r = 0.0;   // 0 = range resolution
    double sigma_fd = 0.0;  // 0 = Doppler resolution
    double sigma_pv = 7.5;  // half the minimum detectable box
    bool heading_noise = true;
    bool joseph_form = true;
    bool paper_doppler = false;
};

struct ScenarioConfig {
    uint64_t seed = 1;
    int frames = 60;
    bool dump_images = false;

    TrajectorySpec trajectory = TrajectorySpec::canonical(TrajectoryKind::SSUT);
    TargetModel target = TargetModel::cuboid();
    bool self_shadowing = true;
    EgoSensorLayout ego;

    RadarConfig radar;
    StretchConfig stretch;
    CfarSettings cfar;
    ClutterParams clutter;

    CameraIntrinsics intrinsics;
    CameraDetectorConfig camera;

    FusionSettings fusion;
    GateConfig gate;
    ImageSettings image;

    void validate() const;

    /// Desk-scale scenario for one of the canonical trajectories.
    static ScenarioConfig preset(TrajectoryKind kind);
};

std::string serialize_config(const ScenarioConfig& cfg);
ScenarioConfig parse_config(const std::string& text);

void save_config(const std::filesystem::path& path, const ScenarioConfig& cfg);
ScenarioConfig load_config(const std::filesystem::path& path);

}  // namespace rcisar

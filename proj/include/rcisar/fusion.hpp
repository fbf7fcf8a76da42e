#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "rcisar/camera.hpp"
#include "rcisar/common.hpp"
#include "rcisar/isar.hpp"

namespace rcisar {

// CTRV extended Kalman filter over x = [x, y, vx, vy, omega], fused from
// radar range/Doppler and the camera lateral pixel. The state lives in the
// world frame; the measurement model subtracts the sensor positions.

using Vec5 = Eigen::Matrix<double, 5, 1>;
using Mat5 = Eigen::Matrix<double, 5, 5>;

struct FusedState {
    Vec5 x = Vec5::Zero();
    Mat5 P = Mat5::Identity();
    int k = 0;

    Vector2d position() const { return {x(0), x(1)}; }
    Vector2d velocity() const { return {x(2), x(3)}; }
    double omega() const { return x(4); }
};

struct FusionNoise {
    double sigma_a = 2.0;      // acceleration noise [m/s^2]
    double sigma_alpha = 8.0;  // yaw-acceleration noise [rad/s^2]
    Eigen::Vector3d r_diag{0.01, 97656.25, 56.25};  // var(r), var(f_D), var(p_v)
    double T = 0.1;            // update interval (one CPI frame)
    // Process-noise direction: acceleration along the heading (standard CTRV)
    // or along (cos wT, sin wT) as printed in the source material.
    bool heading_noise = true;
    bool joseph_form = true;
};

struct SensorGeometry {
    Vector2d radar_xy{0, 0};
    double radar_boresight = 0.0;  // [rad], used by the radar-only fallback init
    double fc = 77e9;
    ProjectionMatrix camera_projection = ProjectionMatrix::Zero();
    CameraIntrinsics intrinsics;
    Vector3d camera_pos{0, 0, 0};
    double camera_yaw = 0.0;
    double target_ref_height = 0.7;
    bool camera_enabled = true;
    // Doppler model: standard f_D = (2 fc / c) rdot, or the doubled variant.
    bool paper_doppler = false;
};

struct FusedMeasurement {
    std::optional<double> range_m;
    std::optional<double> doppler_hz;
    std::optional<double> pixel_v;
    int k = 0;
};

/// CTRV mean propagation (exact constant-turn arc; analytic limit below
/// |omega| T < 1e-6).
Vec5 ctrv_predict_mean(const Vec5& x, double T);

/// Jacobian of ctrv_predict_mean, analytic in both branches.
Mat5 ctrv_jacobian(const Vec5& x, double T);

/// Process noise G diag(sigma_a^2, sigma_alpha^2) G^T.
Mat5 process_noise(const Vec5& x, const FusionNoise& noise);

FusedState predict(const FusedState& state, const FusionNoise& noise);

struct PredictedMeasurement {
    double range_m = 0;
    double doppler_hz = 0;
    std::optional<double> pixel_v;  // absent when the point projects behind the camera
};

/// Measurement function h(x). Throws SingularityError at zero range.
PredictedMeasurement measurement_model(const Vec5& x, const SensorGeometry& geom);

/// Analytic 3x5 measurement Jacobian (rows: range, Doppler, pixel).
Eigen::Matrix<double, 3, 5> measurement_jacobian(const Vec5& x, const SensorGeometry& geom);

struct GainReport {
    // transposed view (measurement m, state n) matching the K_{m,n} indexing
    Eigen::Matrix<double, 3, 5> gain = Eigen::Matrix<double, 3, 5>::Zero();
    Eigen::Vector3d innovation{0, 0, 0};
    std::array<bool, 3> used{false, false, false};
    double innovation_cond = 0.0;
};

/// One EKF update. Missing components are removed from the update entirely
/// (equivalent to the R -> infinity limit); their gain rows stay zero in the
/// report. With every component missing the prediction is returned unchanged.
FusedState ekf_step(const FusedState& predicted, const FusedMeasurement& z,
                    const FusionNoise& noise, const SensorGeometry& geom,
                    GainReport* report = nullptr);

struct GateConfig {
    double position_scale = 3.0;   // multiples of predicted position sigma
    double position_floor = 5.0;   // [m]; must tolerate the facing-side bias
    double position_override = 0;  // >0 replaces the adaptive radius
    double pixel_scale = 3.0;
    double pixel_floor = 30.0;     // [px]
    double pixel_override = 0;
    // select the radar survivor by normalized (range, Doppler) innovation
    // instead of plain position distance
    bool doppler_selection = true;
};

struct GateLog {
    int radar_accepted = 0, radar_rejected = 0;
    int camera_accepted = 0, camera_rejected = 0;
    double position_radius = 0, pixel_radius = 0;
};

/// Single-target gating: a radar measurement is accepted when the implied
/// position (measured range along the predicted bearing) lies within the gate
/// radius of the predicted position; a camera detection when its lateral
/// pixel falls within the pixel gate. Among the survivors the one nearest to
/// the predicted measurement (normalized range/Doppler innovation for radar,
/// pixel distance for the camera) wins, so a static clutter cluster sitting
/// at the right range cannot outbid the target.
FusedMeasurement gate(const FusedState& predicted, const std::vector<RadarMeasurement>& radar,
                      const std::vector<CameraDetection>& camera, const SensorGeometry& geom,
                      const GateConfig& cfg, const FusionNoise& noise, GateLog* log = nullptr);

/// Track initialization from the first frame where both sensors report:
/// measured range along the camera-pixel bearing, zero velocity, a small
/// omega to stay off the omega = 0 branch, and a large diagonal covariance.
FusedState initialize_track(const RadarMeasurement& radar, const CameraDetection& camera,
                            const SensorGeometry& geom, int k);

/// Rotation rate of the line of sight in the target body frame,
/// omega - bearing_rate; this is the Doppler-to-crossrange scale the ISAR
/// chain needs (pure CTRV yaw rate misses the aspect change of a passing
/// target).
double effective_rotation(const Vec5& x, const Vector2d& radar_xy);

struct CompensationParams {
    double r0 = 0;         // range at CPI start [m]
    double vr = 0;         // radial velocity [m/s]
    double omega_eff = 0;  // rotation rate for the crossrange map [rad/s]
    bool valid = false;
};

/// Compensation parameters for the NEXT frame from the current corrected
/// state: the state is propagated one interval ahead and converted to
/// (r0, vr, omega_eff) relative to the radar.
CompensationParams emit_compensation(const FusedState& corrected, const FusionNoise& noise,
                                     const Vector2d& radar_xy);

/// Ground-truth compensation parameters for the same consumer.
CompensationParams compensation_from_state(const TargetState& gt, const Vector2d& radar_xy,
                                           double target_ref_height, double radar_z);

struct TrackFrameInput {
    std::vector<RadarMeasurement> radar;
    std::vector<CameraDetection> camera;
};

struct TrackRecord {
    int k = 0;
    bool initialized = false;
    FusedState post;
    GainReport gains;
    FusedMeasurement accepted;
    GateLog gate_log;
    CompensationParams emitted;  // for CPI k+1
};

/// Sequential single-target track state machine. A fresh track stays
/// tentative until a few radar measurements have been accepted; a tentative
/// track that keeps rejecting radar while the camera reports is dropped and
/// re-initialized (a clutter cluster can fake the first range fix when the
/// target is still outside the instrumented range).
class Tracker {
public:
    Tracker(const FusionNoise& noise, const SensorGeometry& geom, const GateConfig& gate_cfg)
        : noise_(noise), geom_(geom), gate_(gate_cfg) {}

    TrackRecord step(int k, const std::vector<RadarMeasurement>& radar,
                     const std::vector<CameraDetection>& camera);

    bool initialized() const { return initialized_; }
    const FusedState& state() const { return state_; }

    static constexpr int kConfirmHits = 3;
    static constexpr int kTentativeMisses = 6;
    static constexpr int kCameraReopen = 4;
    static constexpr int kRadarOnlyInit = 8;  // frames of radar-with-no-camera before
                                              // falling back to a boresight init

private:
    FusionNoise noise_;
    SensorGeometry geom_;
    GateConfig gate_;
    FusedState state_;
    bool initialized_ = false;
    int radar_hits_ = 0;
    int tentative_misses_ = 0;
    int camera_reject_streak_ = 0;
    int radar_only_streak_ = 0;
};

/// Batch wrapper over Tracker for pre-computed per-frame measurements.
std::vector<TrackRecord> track_loop(const std::vector<TrackFrameInput>& frames,
                                    const FusionNoise& noise, const SensorGeometry& geom,
                                    const GateConfig& gate_cfg);

}  // namespace rcisar

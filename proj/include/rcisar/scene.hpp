#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "rcisar/common.hpp"
#include "rcisar/rng.hpp"

namespace rcisar {

using Eigen::Vector2d;
using Eigen::Vector3d;

// ---------------------------------------------------------------------------
// Ground-truth target kinematics on the four canonical junction trajectories.
//
// World frame: X points north (along the north-south road), Y points west,
// Z up, origin at the south-west corner of the junction layout.
// ---------------------------------------------------------------------------

enum class TrajectoryKind { SSUT, NNUT, ENRT, WSRT, Custom };

std::string to_string(TrajectoryKind k);
TrajectoryKind trajectory_kind_from_string(const std::string& s);

struct TargetState {
    double x = 0, y = 0;    // tracked centroid position [m]
    double vx = 0, vy = 0;  // [m/s]
    double omega = 0;       // yaw rate [rad/s]
    double yaw = 0;         // heading [rad]
    double t = 0;           // [s]

    Vector2d position() const { return {x, y}; }
    Vector2d velocity() const { return {vx, vy}; }
    double speed() const { return std::hypot(vx, vy); }
};

struct TrajectorySpec {
    TrajectoryKind kind = TrajectoryKind::SSUT;
    Vector3d start_position{20.0, 39.5, 0.0};
    Vector3d end_position{20.0, 35.4, 0.0};
    double speed = 6.0;     // [m/s]
    double duration = 6.0;  // [s]
    // Custom trajectories: polyline waypoints, corners rounded with
    // constant-radius fillets so the path stays C1.
    std::vector<Vector3d> waypoints;
    double fillet_radius = 5.0;

    static TrajectorySpec canonical(TrajectoryKind kind);
};

/// Compiled piecewise straight/arc path at constant speed.
class Trajectory {
public:
    explicit Trajectory(const TrajectorySpec& spec);

    /// State at time t. Throws std::domain_error outside [0, duration].
    TargetState state_at(double t) const;

    double duration() const { return duration_; }
    double path_length() const { return length_; }

    struct Segment {
        double t0, t1;  // time window [s]
        double omega;   // 0 on straights
    };
    /// Time windows of the straight/turn pieces (for turn-window queries).
    std::vector<Segment> segments() const;

private:
    struct Piece {
        double s0 = 0, len = 0;  // arclength window
        bool arc = false;
        Vector2d p0;        // start point
        double heading0 = 0;
        Vector2d center;    // arc only
        double radius = 0;  // arc only
        int dir = 0;        // +1 ccw, -1 cw
    };
    std::vector<Piece> pieces_;
    double speed_ = 0, duration_ = 0, length_ = 0;
};

/// Convenience wrapper matching the one-shot sampling interface.
TargetState sample_state(const TrajectorySpec& spec, double t);

// ---------------------------------------------------------------------------
// Extended target: cuboid with 12 triangular facets.
// ---------------------------------------------------------------------------

struct Facet {
    Vector3d v0, v1, v2;            // body frame, centroid at origin
    double base_reflectivity = 1.0;

    Vector3d normal() const;    // unit outward normal
    Vector3d centroid() const { return (v0 + v1 + v2) / 3.0; }
    double area() const;
};

struct TargetModel {
    double length = 4.7, width = 1.8, height = 1.4;  // [m]
    std::vector<Facet> facets;  // 12 triangles, 2 per face
    int dense_count = 0;        // 0 = facet centroids; >0 = sampled point cloud

    static TargetModel cuboid(double length = 4.7, double width = 1.8, double height = 1.4);
    void validate() const;
};

/// Physical-optics flat-plate reflectivity with cos^2 angular taper.
/// Returns an RCS in m^2; zero for degenerate triangles and grazing incidence.
double facet_rcs(const Facet& f, double wavelength, double incidence_rad);

struct Scatterer {
    Vector3d position;          // world frame [m]
    double amplitude = 0;       // sqrt(RCS) scaled by base reflectivity
    double radial_velocity = 0; // [m/s], receding positive
    bool visible = true;
};

struct SnapshotOptions {
    double wavelength = kSpeedOfLight / 77e9;
    bool self_shadowing = true;  // back-face culling of the convex body
    uint64_t seed = 0;           // dense sampling only
};

/// Facet scatterers of the target at one instant, as seen from sensor_pos.
/// Radial velocity includes the translational and rotational (omega x lever)
/// parts; the tracked centroid rides at the configured centroid height.
std::vector<Scatterer> scatterer_snapshot(const TargetModel& model, const TargetState& state,
                                          const Vector3d& sensor_pos, const SnapshotOptions& opt);

/// World positions of the 8 cuboid corners at the given state.
std::vector<Vector3d> cuboid_corners(const TargetModel& model, const TargetState& state);

// ---------------------------------------------------------------------------
// Ego vehicle and sensor mounts.
// ---------------------------------------------------------------------------

struct EgoSensorLayout {
    Vector3d ego_center{10.0, 42.6, 0.7};
    Vector3d ego_dims{4.7, 1.8, 1.4};
    double wheelbase = 2.8;
    double front_overhang = 0.9;
    double radar_height = 0.1;     // above ground at the front overhang
    double camera_top_drop = 0.1;  // below the ego roof line
    double camera_yaw = 0.0;

    /// Radar phase center (receiver 1); receiver 2 sits baseline d above it.
    Vector3d radar_position() const {
        return {ego_center.x() + ego_dims.x() / 2.0, ego_center.y(), radar_height};
    }
    /// Camera above the front axle, 0.1 m below the roof.
    Vector3d camera_position() const {
        const double front_axle = ego_center.x() + ego_dims.x() / 2.0 - front_overhang;
        const double roof = ego_center.z() + ego_dims.z() / 2.0;
        return {front_axle, ego_center.y(), roof - camera_top_drop};
    }
};

}  // namespace rcisar

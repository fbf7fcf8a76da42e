#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

#include "rcisar/common.hpp"
#include "rcisar/rng.hpp"
#include "rcisar/scene.hpp"

namespace rcisar {

// Pinhole model. Pixel conventions follow the projection equations: the
// homogeneous image point is [x_c; x_c*p_u; x_c*p_v], p_u = fu*y_c/x_c + pu0,
// p_v = fv*z_c/x_c + pv0. The camera frame is mounted so that x_c looks along
// the lane, y_c points up and z_c points to the right; p_v is therefore the
// lateral pixel coordinate that the tracker consumes.

struct CameraIntrinsics {
    double fu = 800.0, fv = 800.0;   // m_u*f, m_v*f [px]
    double pu0 = 320.0, pv0 = 240.0; // principal point [px]
    int image_u = 480, image_v = 640;

    void validate() const;
};

struct CameraExtrinsics {
    Eigen::Matrix3d rotation;   // x_c = R x_w + t
    Eigen::Vector3d translation;

    void validate() const;  // orthonormal, det +1

    /// Mount with x_c = world forward(yaw), y_c = world up, z_c = right.
    static CameraExtrinsics from_mount(const Vector3d& camera_pos, double yaw = 0.0);
};

using ProjectionMatrix = Eigen::Matrix<double, 3, 4>;

/// P = M_int * M_ext; homogeneous pixel = P * [x_w; 1], normalized by row 0.
ProjectionMatrix projection_matrix(const CameraIntrinsics& intr, const CameraExtrinsics& extr);

struct Pixel {
    double u = 0, v = 0;
};

enum class ProjectStatus { Ok, OutOfFov, BehindCamera };

struct ProjectResult {
    Pixel px;
    double depth = 0;  // x_c
    ProjectStatus status = ProjectStatus::Ok;
};

/// Projects a world point. BehindCamera when the depth coordinate is <= 0;
/// OutOfFov when the pixel falls outside [1,U]x[1,V].
ProjectResult project(const ProjectionMatrix& P, const Vector3d& x_world,
                      const CameraIntrinsics& intr);

struct BoundingBox {
    double umin = 0, umax = 0, vmin = 0, vmax = 0;
    double width() const { return vmax - vmin; }
    double height() const { return umax - umin; }
};

struct CameraDetection {
    Pixel centroid;
    BoundingBox box;
    bool genuine = true;  // ground-truth annotation, hidden from the tracker
    int frame = 0;
};

struct CameraDetectorConfig {
    double pd = 0.9;
    double fp_rate = 0.1;
    double min_box_px = 15.0;
    double max_range = 100.0;
};

/// Statistical detection of the cuboid target: the projected bounding box of
/// the 8 corners must be at least min_box_px on each side and at least partly
/// inside the image; the detection then fires with probability pd. A false
/// positive is added with probability fp_rate at a uniform image location.
std::vector<CameraDetection> detect_target(std::span<const Vector3d> corners_world,
                                           const ProjectionMatrix& P,
                                           const CameraIntrinsics& intr,
                                           const Vector3d& camera_pos, int frame,
                                           const CameraDetectorConfig& cfg, Rng& rng);

}  // namespace rcisar

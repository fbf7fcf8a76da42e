#include "rcisar/camera.hpp"

#include <cmath>

namespace rcisar {

void CameraIntrinsics::validate() const {
    if (fu <= 0 || fv <= 0) throw ConfigError("focal products must be positive");
    if (pu0 < 1 || pu0 > image_u || pv0 < 1 || pv0 > image_v)
        throw ConfigError("principal point must lie inside the image");
    if (image_u <= 0 || image_v <= 0) throw ConfigError("image size must be positive");
}

void CameraExtrinsics::validate() const {
    const Eigen::Matrix3d e = rotation.transpose() * rotation - Eigen::Matrix3d::Identity();
    if (e.cwiseAbs().maxCoeff() > 1e-10) throw ConfigError("extrinsic rotation not orthonormal");
    if (std::abs(rotation.determinant() - 1.0) > 1e-10)
        throw ConfigError("extrinsic rotation must have det +1");
}

CameraExtrinsics CameraExtrinsics::from_mount(const Vector3d& camera_pos, double yaw) {
    const Vector3d forward(std::cos(yaw), std::sin(yaw), 0.0);
    const Vector3d up(0.0, 0.0, 1.0);
    const Vector3d right(std::sin(yaw), -std::cos(yaw), 0.0);
    CameraExtrinsics e;
    e.rotation.row(0) = forward;
    e.rotation.row(1) = up;
    e.rotation.row(2) = right;
    e.translation = -e.rotation * camera_pos;
    return e;
}

ProjectionMatrix projection_matrix(const CameraIntrinsics& intr, const CameraExtrinsics& extr) {
    intr.validate();
    extr.validate();
    Eigen::Matrix<double, 3, 4> m_int;
    m_int << 1, 0, 0, 0,
             intr.pu0, intr.fu, 0, 0,
             intr.pv0, 0, intr.fv, 0;
    Eigen::Matrix4d m_ext = Eigen::Matrix4d::Identity();
    m_ext.topLeftCorner<3, 3>() = extr.rotation;
    m_ext.topRightCorner<3, 1>() = extr.translation;
    return m_int * m_ext;
}

ProjectResult project(const ProjectionMatrix& P, const Vector3d& x_world,
                      const CameraIntrinsics& intr) {
    if (!x_world.allFinite()) throw std::invalid_argument("project: world point must be finite");
    Eigen::Vector4d xh;
    xh << x_world, 1.0;
    const Eigen::Vector3d u_bar = P * xh;
    ProjectResult res;
    res.depth = u_bar(0);
    if (res.depth <= 0) {
        res.status = ProjectStatus::BehindCamera;
        return res;
    }
    res.px.u = u_bar(1) / u_bar(0);
    res.px.v = u_bar(2) / u_bar(0);
    const bool inside = res.px.u >= 1.0 && res.px.u <= intr.image_u && res.px.v >= 1.0 &&
                        res.px.v <= intr.image_v;
    res.status = inside ? ProjectStatus::Ok : ProjectStatus::OutOfFov;
    return res;
}

std::vector<CameraDetection> detect_target(std::span<const Vector3d> corners_world,
                                           const ProjectionMatrix& P,
                                           const CameraIntrinsics& intr,
                                           const Vector3d& camera_pos, int frame,
                                           const CameraDetectorConfig& cfg, Rng& rng) {
    if (cfg.pd < 0 || cfg.pd > 1 || cfg.fp_rate < 0 || cfg.fp_rate > 1)
        throw std::invalid_argument("detection probabilities must be in [0,1]");

    std::vector<CameraDetection> out;

    bool geometry_ok = !corners_world.empty();
    BoundingBox box;
    bool first = true;
    Vector3d mean_corner = Vector3d::Zero();
    for (const auto& c : corners_world) {
        const auto r = project(P, c, intr);
        if (r.status == ProjectStatus::BehindCamera) {
            geometry_ok = false;
            break;
        }
        mean_corner += c;
        if (first) {
            box = {r.px.u, r.px.u, r.px.v, r.px.v};
            first = false;
        } else {
            box.umin = std::min(box.umin, r.px.u);
            box.umax = std::max(box.umax, r.px.u);
            box.vmin = std::min(box.vmin, r.px.v);
            box.vmax = std::max(box.vmax, r.px.v);
        }
    }
    if (geometry_ok) {
        mean_corner /= double(corners_world.size());
        const double range = (mean_corner - camera_pos).norm();
        const bool big_enough = box.width() >= cfg.min_box_px && box.height() >= cfg.min_box_px;
        const bool overlaps = box.umax >= 1.0 && box.umin <= intr.image_u && box.vmax >= 1.0 &&
                              box.vmin <= intr.image_v;
        geometry_ok = big_enough && overlaps && range <= cfg.max_range;
    }
    // RNG draw order is fixed: genuine gate first, then the false-positive gate.
    const bool fire = rng.bernoulli(cfg.pd);
    if (geometry_ok && fire) {
        CameraDetection d;
        d.centroid = {(box.umin + box.umax) / 2.0, (box.vmin + box.vmax) / 2.0};
        d.box = box;
        d.genuine = true;
        d.frame = frame;
        out.push_back(d);
    }
    if (rng.bernoulli(cfg.fp_rate)) {
        CameraDetection d;
        const double bu = rng.uniform(cfg.min_box_px, std::min(120.0, intr.image_u / 2.0));
        const double bv = rng.uniform(cfg.min_box_px, std::min(120.0, intr.image_v / 2.0));
        const double cu = rng.uniform(1.0 + bu / 2, intr.image_u - bu / 2);
        const double cv = rng.uniform(1.0 + bv / 2, intr.image_v - bv / 2);
        d.centroid = {cu, cv};
        d.box = {cu - bu / 2, cu + bu / 2, cv - bv / 2, cv + bv / 2};
        d.genuine = false;
        d.frame = frame;
        out.push_back(d);
    }
    return out;
}

}  // namespace rcisar

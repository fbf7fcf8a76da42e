#include "rcisar/fusion.hpp"

#include <cmath>

namespace rcisar {

namespace {
constexpr double kOmegaSwitch = 1e-6;  // |omega| T below this uses the straight-line limit

void symmetrize(Mat5& P) { P = 0.5 * (P + P.transpose()).eval(); }
}  // namespace

Vec5 ctrv_predict_mean(const Vec5& x, double T) {
    const double vx = x(2), vy = x(3), w = x(4);
    Vec5 out = x;
    if (std::abs(w) * T < kOmegaSwitch) {
        out(0) = x(0) + vx * T;
        out(1) = x(1) + vy * T;
        return out;
    }
    const double s = std::sin(w * T), c = std::cos(w * T);
    out(0) = x(0) + (vx * s - vy * (1.0 - c)) / w;
    out(1) = x(1) + (vx * (1.0 - c) + vy * s) / w;
    out(2) = vx * c - vy * s;
    out(3) = vx * s + vy * c;
    return out;
}

Mat5 ctrv_jacobian(const Vec5& x, double T) {
    const double vx = x(2), vy = x(3), w = x(4);
    Mat5 F = Mat5::Identity();
    if (std::abs(w) * T < kOmegaSwitch) {
        F(0, 2) = T;
        F(1, 3) = T;
        F(0, 4) = -vy * T * T / 2.0;
        F(1, 4) = vx * T * T / 2.0;
        F(2, 4) = -vy * T;
        F(3, 4) = vx * T;
        return F;
    }
    const double s = std::sin(w * T), c = std::cos(w * T);
    F(0, 2) = s / w;
    F(0, 3) = -(1.0 - c) / w;
    F(0, 4) = (vx * (w * T * c - s) - vy * (w * T * s - 1.0 + c)) / (w * w);
    F(1, 2) = (1.0 - c) / w;
    F(1, 3) = s / w;
    F(1, 4) = (vx * (w * T * s - 1.0 + c) + vy * (w * T * c - s)) / (w * w);
    F(2, 2) = c;
    F(2, 3) = -s;
    F(2, 4) = -T * (vx * s + vy * c);
    F(3, 2) = s;
    F(3, 3) = c;
    F(3, 4) = T * (vx * c - vy * s);
    return F;
}

Mat5 process_noise(const Vec5& x, const FusionNoise& noise) {
    const double T = noise.T;
    double ca, sa;
    if (noise.heading_noise) {
        const double v = std::hypot(x(2), x(3));
        ca = v > 1e-9 ? x(2) / v : 1.0;
        sa = v > 1e-9 ? x(3) / v : 0.0;
    } else {
        ca = std::cos(x(4) * T);
        sa = std::sin(x(4) * T);
    }
    Eigen::Matrix<double, 5, 2> G = Eigen::Matrix<double, 5, 2>::Zero();
    G(0, 0) = T * T / 2.0 * ca;
    G(1, 0) = T * T / 2.0 * sa;
    G(2, 0) = T * ca;
    G(3, 0) = T * sa;
    G(4, 1) = T;
    Eigen::Matrix2d W = Eigen::Matrix2d::Zero();
    W(0, 0) = noise.sigma_a * noise.sigma_a;
    W(1, 1) = noise.sigma_alpha * noise.sigma_alpha;
    return G * W * G.transpose();
}

FusedState predict(const FusedState& state, const FusionNoise& noise) {
    FusedState out;
    out.k = state.k + 1;
    out.x = ctrv_predict_mean(state.x, noise.T);
    const Mat5 F = ctrv_jacobian(state.x, noise.T);
    out.P = F * state.P * F.transpose() + process_noise(state.x, noise);
    symmetrize(out.P);
    return out;
}

PredictedMeasurement measurement_model(const Vec5& x, const SensorGeometry& geom) {
    const Vector2d rel = Vector2d(x(0), x(1)) - geom.radar_xy;
    const double r = rel.norm();
    if (r < 1e-9) throw SingularityError("measurement model: target at the radar origin");
    PredictedMeasurement z;
    z.range_m = r;
    const double doppler_k = (geom.paper_doppler ? 4.0 : 2.0) * geom.fc / kSpeedOfLight;
    z.doppler_hz = doppler_k * (rel.x() * x(2) + rel.y() * x(3)) / r;
    if (geom.camera_enabled) {
        const auto pr = project(geom.camera_projection,
                                Vector3d(x(0), x(1), geom.target_ref_height), geom.intrinsics);
        if (pr.status != ProjectStatus::BehindCamera) z.pixel_v = pr.px.v;
    }
    return z;
}

Eigen::Matrix<double, 3, 5> measurement_jacobian(const Vec5& x, const SensorGeometry& geom) {
    const Vector2d rel = Vector2d(x(0), x(1)) - geom.radar_xy;
    const double r = rel.norm();
    if (r < 1e-9) throw SingularityError("measurement Jacobian: target at the radar origin");
    Eigen::Matrix<double, 3, 5> H = Eigen::Matrix<double, 3, 5>::Zero();
    H(0, 0) = rel.x() / r;
    H(0, 1) = rel.y() / r;
    const double doppler_k = (geom.paper_doppler ? 4.0 : 2.0) * geom.fc / kSpeedOfLight;
    const double radial = rel.x() * x(2) + rel.y() * x(3);
    H(1, 0) = doppler_k * (x(2) / r - radial * rel.x() / (r * r * r));
    H(1, 1) = doppler_k * (x(3) / r - radial * rel.y() / (r * r * r));
    H(1, 2) = doppler_k * rel.x() / r;
    H(1, 3) = doppler_k * rel.y() / r;
    if (geom.camera_enabled) {
        Eigen::Vector4d xh(x(0), x(1), geom.target_ref_height, 1.0);
        const Eigen::Vector3d u_bar = geom.camera_projection * xh;
        if (u_bar(0) > 0) {
            const double x0 = u_bar(0), x2 = u_bar(2);
            for (int col = 0; col < 2; ++col) {
                const double d0 = geom.camera_projection(0, col);
                const double d2 = geom.camera_projection(2, col);
                H(2, col) = (d2 * x0 - d0 * x2) / (x0 * x0);
            }
        }
    }
    return H;
}

FusedState ekf_step(const FusedState& predicted, const FusedMeasurement& z,
                    const FusionNoise& noise, const SensorGeometry& geom, GainReport* report) {
    const PredictedMeasurement h = measurement_model(predicted.x, geom);
    const Eigen::Matrix<double, 3, 5> H_full = measurement_jacobian(predicted.x, geom);

    std::array<bool, 3> active{};
    std::array<double, 3> innovation{};
    active[0] = z.range_m.has_value();
    if (active[0]) innovation[0] = *z.range_m - h.range_m;
    active[1] = z.doppler_hz.has_value();
    if (active[1]) innovation[1] = *z.doppler_hz - h.doppler_hz;
    active[2] = z.pixel_v.has_value() && h.pixel_v.has_value();
    if (active[2]) innovation[2] = *z.pixel_v - *h.pixel_v;

    GainReport rep;
    rep.used = active;
    rep.innovation = Eigen::Vector3d::Constant(std::nan(""));

    int m = 0;
    for (bool a : active) m += a ? 1 : 0;
    if (m == 0) {
        // both sensors silent: the prediction stands uncorrected
        if (report) *report = rep;
        return predicted;
    }

    Eigen::MatrixXd H(m, 5);
    Eigen::VectorXd y(m);
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(m, m);
    int row = 0;
    for (int i = 0; i < 3; ++i) {
        if (!active[i]) continue;
        H.row(row) = H_full.row(i);
        y(row) = innovation[i];
        R(row, row) = noise.r_diag(i);
        rep.innovation(i) = innovation[i];
        ++row;
    }

    const Eigen::MatrixXd S = H * predicted.P * H.transpose() + R;
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(S, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    if (!(smin > 0) || !std::isfinite(smax))
        throw SingularityError("innovation covariance is not invertible");
    rep.innovation_cond = smax / smin;

    const Eigen::MatrixXd K = predicted.P * H.transpose() * S.inverse();

    FusedState out = predicted;
    out.x = predicted.x + K * y;
    if (noise.joseph_form) {
        const Mat5 IKH = Mat5::Identity() - K * H;
        out.P = IKH * predicted.P * IKH.transpose() + K * R * K.transpose();
    } else {
        out.P = (Mat5::Identity() - K * H) * predicted.P;
    }
    symmetrize(out.P);

    row = 0;
    for (int i = 0; i < 3; ++i) {
        if (!active[i]) continue;
        rep.gain.row(i) = K.col(row).transpose();
        ++row;
    }
    if (report) *report = rep;
    return out;
}

FusedMeasurement gate(const FusedState& predicted, const std::vector<RadarMeasurement>& radar,
                      const std::vector<CameraDetection>& camera, const SensorGeometry& geom,
                      const GateConfig& cfg, const FusionNoise& noise, GateLog* log) {
    FusedMeasurement out;
    out.k = predicted.k;
    GateLog gl;

    const Vector2d rel = predicted.position() - geom.radar_xy;
    const double pred_range = rel.norm();
    const Vector2d bearing = pred_range > 1e-9 ? Vector2d(rel / pred_range) : Vector2d(1, 0);

    const double pos_sigma =
        std::sqrt(std::max(predicted.P(0, 0), predicted.P(1, 1)));
    double pos_radius = cfg.position_override > 0
                            ? cfg.position_override
                            : std::max(cfg.position_floor, cfg.position_scale * pos_sigma);
    gl.position_radius = pos_radius;

    std::optional<PredictedMeasurement> pred_z;
    try {
        pred_z = measurement_model(predicted.x, geom);
    } catch (const SingularityError&) {
        pred_z = std::nullopt;
    }

    // Doppler only discriminates once the velocity estimate has converged;
    // right after the zero-velocity initialization it would pull the track
    // toward static clutter.
    const bool use_doppler = cfg.doppler_selection && pred_z.has_value();

    double best_dist = std::numeric_limits<double>::infinity();
    const RadarMeasurement* best_radar = nullptr;
    for (const auto& rm : radar) {
        const Vector2d implied = geom.radar_xy + rm.range_m * bearing;
        const double d = (implied - predicted.position()).norm();
        if (d > pos_radius) continue;
        double score = d;
        if (use_doppler) {
            const double nr = (rm.range_m - pred_z->range_m) / std::sqrt(noise.r_diag(0));
            const double nf = (rm.doppler_hz - pred_z->doppler_hz) / std::sqrt(noise.r_diag(1));
            score = nr * nr + nf * nf;
        }
        if (score < best_dist) {
            best_dist = score;
            best_radar = &rm;
        }
    }
    gl.radar_accepted = best_radar ? 1 : 0;
    gl.radar_rejected = static_cast<int>(radar.size()) - gl.radar_accepted;
    if (best_radar) {
        out.range_m = best_radar->range_m;
        out.doppler_hz = best_radar->doppler_hz;
    }

    const std::optional<double> pred_pv = pred_z ? pred_z->pixel_v : std::nullopt;
    if (pred_pv) {
        // pixel gate from the projected position uncertainty
        const auto H = measurement_jacobian(predicted.x, geom);
        const double pix_var =
            (H.row(2) * predicted.P * H.row(2).transpose())(0, 0);
        double pix_radius = cfg.pixel_override > 0
                                ? cfg.pixel_override
                                : std::max(cfg.pixel_floor,
                                           cfg.pixel_scale * std::sqrt(std::max(0.0, pix_var)));
        gl.pixel_radius = pix_radius;
        double best_px = std::numeric_limits<double>::infinity();
        const CameraDetection* best_cam = nullptr;
        for (const auto& cd : camera) {
            const double d = std::abs(cd.centroid.v - *pred_pv);
            if (d <= pix_radius && d < best_px) {
                best_px = d;
                best_cam = &cd;
            }
        }
        gl.camera_accepted = best_cam ? 1 : 0;
        gl.camera_rejected = static_cast<int>(camera.size()) - gl.camera_accepted;
        if (best_cam) out.pixel_v = best_cam->centroid.v;
    } else {
        gl.camera_rejected = static_cast<int>(camera.size());
    }
    if (log) *log = gl;
    return out;
}

FusedState initialize_track(const RadarMeasurement& radar, const CameraDetection& camera,
                            const SensorGeometry& geom, int k) {
    // bearing of the camera ray in the ground plane
    const double tan_lat = (camera.centroid.v - geom.intrinsics.pv0) / geom.intrinsics.fv;
    const double bearing = geom.camera_yaw - std::atan(tan_lat);  // +z_c is to the right
    const Vector2d dir(std::cos(bearing), std::sin(bearing));
    const Vector2d cam_xy(geom.camera_pos.x(), geom.camera_pos.y());

    // point on the camera ray at the measured radar range: solve
    // |cam + t dir - radar| = r for the forward root
    const Vector2d oc = cam_xy - geom.radar_xy;
    const double b = 2.0 * dir.dot(oc);
    const double c = oc.squaredNorm() - radar.range_m * radar.range_m;
    const double disc = b * b - 4.0 * c;
    double t;
    if (disc >= 0) {
        t = (-b + std::sqrt(disc)) / 2.0;
    } else {
        t = radar.range_m;  // sensors nearly collocated; fall back to the range
    }
    const Vector2d pos = cam_xy + std::max(0.0, t) * dir;

    FusedState st;
    st.k = k;
    st.x << pos.x(), pos.y(), 0.0, 0.0, 1e-3;
    st.P = Mat5::Zero();
    st.P.diagonal() << 100.0, 100.0, 100.0, 100.0, 1.0;
    return st;
}

double effective_rotation(const Vec5& x, const Vector2d& radar_xy) {
    const Vector2d rel = Vector2d(x(0), x(1)) - radar_xy;
    const double r2 = rel.squaredNorm();
    if (r2 < 1e-12) return x(4);
    const double bearing_rate = (rel.x() * x(3) - rel.y() * x(2)) / r2;
    return x(4) - bearing_rate;
}

CompensationParams emit_compensation(const FusedState& corrected, const FusionNoise& noise,
                                     const Vector2d& radar_xy) {
    const Vec5 ahead = ctrv_predict_mean(corrected.x, noise.T);
    const Vector2d rel = Vector2d(ahead(0), ahead(1)) - radar_xy;
    const double r = rel.norm();
    CompensationParams cp;
    if (r < 1e-9) return cp;
    cp.r0 = r;
    cp.vr = (rel.x() * ahead(2) + rel.y() * ahead(3)) / r;
    cp.omega_eff = effective_rotation(ahead, radar_xy);
    cp.valid = true;
    return cp;
}

CompensationParams compensation_from_state(const TargetState& gt, const Vector2d& radar_xy,
                                           double target_ref_height, double radar_z) {
    CompensationParams cp;
    const Vector2d rel = gt.position() - radar_xy;
    const double r2d = rel.norm();
    if (r2d < 1e-9) return cp;
    const double dz = target_ref_height - radar_z;
    cp.r0 = std::sqrt(r2d * r2d + dz * dz);
    cp.vr = (rel.x() * gt.vx + rel.y() * gt.vy) / cp.r0;
    Vec5 x;
    x << gt.x, gt.y, gt.vx, gt.vy, gt.omega;
    cp.omega_eff = effective_rotation(x, radar_xy);
    cp.valid = true;
    return cp;
}

TrackRecord Tracker::step(int k, const std::vector<RadarMeasurement>& radar,
                          const std::vector<CameraDetection>& camera) {
    TrackRecord rec;
    rec.k = k;
    if (!initialized_) {
        if (!radar.empty() && !camera.empty()) {
            state_ = initialize_track(radar.front(), camera.front(), geom_, k);
            initialized_ = true;
        } else if (!radar.empty() && camera.empty() && ++radar_only_streak_ >= kRadarOnlyInit) {
            // camera silent for a long stretch: start from the measured range
            // along the boresight with a wide lateral covariance
            const double r = radar.front().range_m;
            state_.k = k;
            state_.x << geom_.radar_xy.x() + r * std::cos(geom_.radar_boresight),
                geom_.radar_xy.y() + r * std::sin(geom_.radar_boresight), 0.0, 0.0, 1e-3;
            state_.P = Mat5::Zero();
            state_.P.diagonal() << 100.0, r * r / 4.0, 100.0, 100.0, 1.0;
            initialized_ = true;
        }
        if (initialized_) {
            radar_hits_ = 0;
            tentative_misses_ = 0;
            camera_reject_streak_ = 0;
            radar_only_streak_ = 0;
            rec.post = state_;
            rec.emitted = emit_compensation(state_, noise_, geom_.radar_xy);
        }
        rec.initialized = initialized_;
        return rec;
    }

    const FusedState pred = predict(state_, noise_);
    GateConfig frame_gate = gate_;
    // Doppler is uninformative until the velocity estimate has converged.
    frame_gate.doppler_selection = gate_.doppler_selection && radar_hits_ >= kConfirmHits;
    // A lateral sensor that keeps reporting but keeps being rejected means
    // the track drifted, not the camera; reopen the pixel gate.
    if (camera_reject_streak_ >= kCameraReopen)
        frame_gate.pixel_override = 2.0 * geom_.intrinsics.image_v;
    rec.accepted = gate(pred, radar, camera, geom_, frame_gate, noise_, &rec.gate_log);
    state_ = ekf_step(pred, rec.accepted, noise_, geom_, &rec.gains);
    rec.initialized = true;
    rec.post = state_;
    rec.emitted = emit_compensation(state_, noise_, geom_.radar_xy);

    if (rec.gate_log.camera_accepted > 0)
        camera_reject_streak_ = 0;
    else if (!camera.empty())
        ++camera_reject_streak_;

    if (rec.gate_log.radar_accepted > 0) {
        ++radar_hits_;
        tentative_misses_ = 0;
    } else if (radar_hits_ < kConfirmHits && !radar.empty() &&
               rec.gate_log.camera_accepted > 0) {
        // still tentative and the radar keeps reporting somewhere else
        if (++tentative_misses_ >= kTentativeMisses) {
            initialized_ = false;
            radar_hits_ = 0;
            tentative_misses_ = 0;
        }
    }
    return rec;
}

std::vector<TrackRecord> track_loop(const std::vector<TrackFrameInput>& frames,
                                    const FusionNoise& noise, const SensorGeometry& geom,
                                    const GateConfig& gate_cfg) {
    Tracker tracker(noise, geom, gate_cfg);
    std::vector<TrackRecord> out;
    out.reserve(frames.size());
    for (size_t k = 0; k < frames.size(); ++k)
        out.push_back(tracker.step(static_cast<int>(k), frames[k].radar, frames[k].camera));
    return out;
}

}  // namespace rcisar

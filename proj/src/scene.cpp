#include "rcisar/scene.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rcisar {

namespace {

Vector2d perp_left(const Vector2d& d) { return {-d.y(), d.x()}; }

double cross2(const Vector2d& a, const Vector2d& b) { return a.x() * b.y() - a.y() * b.x(); }

struct LaneEndpoints {
    Vector2d p0, h0, p1, h1;
};

LaneEndpoints canonical_lanes(TrajectoryKind kind) {
    switch (kind) {
        case TrajectoryKind::SSUT:
            return {{20.0, 39.5}, {1, 0}, {20.0, 35.4}, {-1, 0}};
        case TrajectoryKind::NNUT:
            return {{58.0, 39.0}, {-1, 0}, {58.0, 42.6}, {1, 0}};
        case TrajectoryKind::ENRT:
            return {{39.0, 20.0}, {0, 1}, {58.0, 42.6}, {1, 0}};
        case TrajectoryKind::WSRT:
            return {{39.0, 58.0}, {0, -1}, {20.0, 35.4}, {-1, 0}};
        default:
            throw std::invalid_argument("canonical_lanes: custom kind has no canonical endpoints");
    }
}

}  // namespace

std::string to_string(TrajectoryKind k) {
    switch (k) {
        case TrajectoryKind::SSUT: return "SSUT";
        case TrajectoryKind::NNUT: return "NNUT";
        case TrajectoryKind::ENRT: return "ENRT";
        case TrajectoryKind::WSRT: return "WSRT";
        default: return "Custom";
    }
}

TrajectoryKind trajectory_kind_from_string(const std::string& s) {
    if (s == "SSUT") return TrajectoryKind::SSUT;
    if (s == "NNUT") return TrajectoryKind::NNUT;
    if (s == "ENRT") return TrajectoryKind::ENRT;
    if (s == "WSRT") return TrajectoryKind::WSRT;
    if (s == "Custom") return TrajectoryKind::Custom;
    throw ConfigError("unknown trajectory kind: " + s);
}

TrajectorySpec TrajectorySpec::canonical(TrajectoryKind kind) {
    TrajectorySpec spec;
    spec.kind = kind;
    const auto lanes = canonical_lanes(kind);
    spec.start_position = {lanes.p0.x(), lanes.p0.y(), 0.0};
    spec.end_position = {lanes.p1.x(), lanes.p1.y(), 0.0};
    spec.speed = 6.0;
    spec.duration = 6.0;
    return spec;
}

Trajectory::Trajectory(const TrajectorySpec& spec) {
    if (spec.speed <= 0.0) throw std::invalid_argument("trajectory speed must be positive");
    speed_ = spec.speed;

    auto add_straight = [&](const Vector2d& p0, const Vector2d& h, double len) {
        if (len < -1e-9) throw std::invalid_argument("trajectory geometry: negative segment length");
        if (len <= 1e-12) return;
        Piece pc;
        pc.s0 = length_;
        pc.len = len;
        pc.arc = false;
        pc.p0 = p0;
        pc.heading0 = std::atan2(h.y(), h.x());
        pieces_.push_back(pc);
        length_ += len;
    };
    auto add_arc = [&](const Vector2d& entry, const Vector2d& h, double radius, int dir,
                       double sweep) {
        Piece pc;
        pc.s0 = length_;
        pc.len = radius * sweep;
        pc.arc = true;
        pc.p0 = entry;
        pc.heading0 = std::atan2(h.y(), h.x());
        pc.center = entry + double(dir) * radius * perp_left(h);
        pc.radius = radius;
        pc.dir = dir;
        pieces_.push_back(pc);
        length_ += pc.len;
        // arc exit point
        const double phi0 = std::atan2(entry.y() - pc.center.y(), entry.x() - pc.center.x());
        const double phi1 = phi0 + dir * sweep;
        return Vector2d(pc.center + radius * Vector2d(std::cos(phi1), std::sin(phi1)));
    };

    if (spec.kind == TrajectoryKind::Custom) {
        if (spec.waypoints.size() < 2)
            throw std::invalid_argument("custom trajectory needs at least 2 waypoints");
        std::vector<Vector2d> wp;
        for (const auto& w : spec.waypoints) wp.emplace_back(w.x(), w.y());
        Vector2d cursor = wp.front();
        for (size_t i = 0; i + 1 < wp.size(); ++i) {
            Vector2d a = cursor, b = wp[i + 1];
            Vector2d d_in = (b - a).normalized();
            if (i + 2 < wp.size()) {
                Vector2d d_out = (wp[i + 2] - wp[i + 1]).normalized();
                const double turn = std::atan2(cross2(d_in, d_out), d_in.dot(d_out));
                if (std::abs(turn) > 1e-9) {
                    const double tau = spec.fillet_radius * std::tan(std::abs(turn) / 2.0);
                    const double seg = (b - a).norm();
                    if (tau > seg || tau > (wp[i + 2] - wp[i + 1]).norm())
                        throw std::invalid_argument("fillet radius too large for waypoint spacing");
                    add_straight(a, d_in, seg - tau);
                    const Vector2d entry = b - tau * d_in;
                    cursor = add_arc(entry, d_in, spec.fillet_radius, turn > 0 ? 1 : -1,
                                     std::abs(turn));
                    continue;
                }
            }
            add_straight(a, d_in, (b - a).norm());
            cursor = b;
        }
        duration_ = length_ / speed_;
        return;
    }

    // Canonical junction maneuvers: straight - single constant-radius arc -
    // straight, with the arc tangent to the entry and exit lanes and the total
    // path length fixed by speed * duration.
    const auto lanes = canonical_lanes(spec.kind);
    const Vector2d p0 = lanes.p0, h0 = lanes.h0, p1 = lanes.p1, h1 = lanes.h1;
    const double total = spec.speed * spec.duration;

    const double dot = h0.dot(h1);
    if (dot < -0.99) {
        // U-turn between antiparallel lanes: the radius is half the lane offset.
        const double lateral = (p1 - p0).dot(perp_left(h0));
        const double radius = std::abs(lateral) / 2.0;
        const int dir = lateral > 0 ? 1 : -1;
        const double arc_len = kPi * radius;
        const double l1 = (total - arc_len - (p0 - p1).dot(h0)) / 2.0;
        const double l2 = total - arc_len - l1;
        if (l1 <= 0 || l2 <= 0)
            throw std::invalid_argument("U-turn does not fit the requested duration");
        add_straight(p0, h0, l1);
        const Vector2d exit = add_arc(p0 + l1 * h0, h0, radius, dir, kPi);
        add_straight(exit, h1, l2);
        if ((exit + l2 * h1 - p1).norm() > 1e-6)
            throw std::invalid_argument("U-turn geometry does not close on the end point");
    } else {
        // Turn between non-parallel lanes through the corner of the two lane lines.
        const double denom = cross2(h0, h1);
        if (std::abs(denom) < 1e-9)
            throw std::invalid_argument("lane headings neither antiparallel nor crossing");
        // p0 + a h0 = p1 + b h1
        const Vector2d dp = p1 - p0;
        const double a = cross2(dp, h1) / denom;
        const Vector2d corner = p0 + a * h0;
        const double dist1 = a;
        const double dist2 = (p1 - corner).dot(h1);
        const double sweep = std::acos(std::clamp(dot, -1.0, 1.0));
        const double shape = sweep - 2.0 * std::tan(sweep / 2.0);
        const double radius = (total - dist1 - dist2) / shape;
        if (radius <= 0) throw std::invalid_argument("turn radius came out non-positive");
        const double tau = radius * std::tan(sweep / 2.0);
        const double l1 = dist1 - tau, l2 = dist2 - tau;
        if (l1 <= 0 || l2 <= 0)
            throw std::invalid_argument("turn does not fit between the lane endpoints");
        const int dir = cross2(h0, h1) > 0 ? 1 : -1;
        add_straight(p0, h0, l1);
        const Vector2d exit = add_arc(p0 + l1 * h0, h0, radius, dir, sweep);
        add_straight(exit, h1, l2);
        if ((exit + l2 * h1 - p1).norm() > 1e-6)
            throw std::invalid_argument("turn geometry does not close on the end point");
    }
    duration_ = length_ / speed_;
}

TargetState Trajectory::state_at(double t) const {
    if (t < -1e-12 || t > duration_ + 1e-12)
        throw std::domain_error("trajectory time outside [0, duration]");
    t = std::clamp(t, 0.0, duration_);
    double s = speed_ * t;
    // find the piece containing arclength s
    size_t i = 0;
    while (i + 1 < pieces_.size() && s > pieces_[i].s0 + pieces_[i].len + 1e-12) ++i;
    const Piece& pc = pieces_[i];
    const double ds = std::clamp(s - pc.s0, 0.0, pc.len);

    TargetState st;
    st.t = t;
    if (!pc.arc) {
        const Vector2d h{std::cos(pc.heading0), std::sin(pc.heading0)};
        const Vector2d p = pc.p0 + ds * h;
        st.x = p.x();
        st.y = p.y();
        st.vx = speed_ * h.x();
        st.vy = speed_ * h.y();
        st.omega = 0.0;
        st.yaw = pc.heading0;
    } else {
        const double phi0 =
            std::atan2(pc.p0.y() - pc.center.y(), pc.p0.x() - pc.center.x());
        const double dphi = pc.dir * ds / pc.radius;
        const double phi = phi0 + dphi;
        const Vector2d p = pc.center + pc.radius * Vector2d(std::cos(phi), std::sin(phi));
        const double heading = pc.heading0 + dphi;
        st.x = p.x();
        st.y = p.y();
        st.vx = speed_ * std::cos(heading);
        st.vy = speed_ * std::sin(heading);
        st.omega = pc.dir * speed_ / pc.radius;
        st.yaw = wrap_pi(heading);
    }
    return st;
}

std::vector<Trajectory::Segment> Trajectory::segments() const {
    std::vector<Segment> out;
    for (const auto& pc : pieces_) {
        Segment seg;
        seg.t0 = pc.s0 / speed_;
        seg.t1 = (pc.s0 + pc.len) / speed_;
        seg.omega = pc.arc ? pc.dir * speed_ / pc.radius : 0.0;
        out.push_back(seg);
    }
    return out;
}

TargetState sample_state(const TrajectorySpec& spec, double t) {
    return Trajectory(spec).state_at(t);
}

// ---------------------------------------------------------------------------

Vector3d Facet::normal() const {
    Vector3d n = (v1 - v0).cross(v2 - v0);
    const double len = n.norm();
    return len > 0 ? Vector3d(n / len) : Vector3d(0, 0, 1);
}

double Facet::area() const { return 0.5 * (v1 - v0).cross(v2 - v0).norm(); }

TargetModel TargetModel::cuboid(double length, double width, double height) {
    TargetModel m;
    m.length = length;
    m.width = width;
    m.height = height;
    const double hx = length / 2, hy = width / 2, hz = height / 2;
    auto corner = [&](int sx, int sy, int sz) {
        return Vector3d(sx * hx, sy * hy, sz * hz);
    };
    // 4 corners per face, CCW seen from outside
    struct Face {
        Vector3d c[4];
    };
    const Face faces[6] = {
        {{corner(1, -1, -1), corner(1, 1, -1), corner(1, 1, 1), corner(1, -1, 1)}},     // +x
        {{corner(-1, 1, -1), corner(-1, -1, -1), corner(-1, -1, 1), corner(-1, 1, 1)}}, // -x
        {{corner(1, 1, -1), corner(-1, 1, -1), corner(-1, 1, 1), corner(1, 1, 1)}},     // +y
        {{corner(-1, -1, -1), corner(1, -1, -1), corner(1, -1, 1), corner(-1, -1, 1)}}, // -y
        {{corner(-1, -1, 1), corner(1, -1, 1), corner(1, 1, 1), corner(-1, 1, 1)}},     // +z
        {{corner(-1, 1, -1), corner(1, 1, -1), corner(1, -1, -1), corner(-1, -1, -1)}}, // -z
    };
    for (const auto& f : faces) {
        Facet a{f.c[0], f.c[1], f.c[2], 1.0};
        Facet b{f.c[0], f.c[2], f.c[3], 1.0};
        for (Facet* fc : {&a, &b}) {
            if (fc->normal().dot(fc->centroid()) < 0) std::swap(fc->v1, fc->v2);
            m.facets.push_back(*fc);
        }
    }
    return m;
}

void TargetModel::validate() const {
    if (length <= 0 || width <= 0 || height <= 0)
        throw std::invalid_argument("target dimensions must be positive");
    if (facets.size() != 12)
        throw std::invalid_argument("cuboid target must carry 12 facets");
    double total = 0;
    for (const auto& f : facets) total += f.area();
    const double expect = 2.0 * (length * width + length * height + width * height);
    if (std::abs(total - expect) > 1e-6 * expect)
        throw std::invalid_argument("facet areas do not cover the cuboid surface");
}

double facet_rcs(const Facet& f, double wavelength, double incidence_rad) {
    if (wavelength <= 0) throw std::invalid_argument("wavelength must be positive");
    const double area = f.area();
    if (area <= 0) return 0.0;
    const double c = std::cos(incidence_rad);
    if (c <= 0) return 0.0;
    const double sigma0 = 4.0 * kPi * area * area / (wavelength * wavelength);
    return sigma0 * c * c;
}

std::vector<Scatterer> scatterer_snapshot(const TargetModel& model, const TargetState& state,
                                          const Vector3d& sensor_pos, const SnapshotOptions& opt) {
    if (!std::isfinite(state.x) || !std::isfinite(state.y) || !std::isfinite(state.omega))
        throw std::invalid_argument("target state must be finite");
    const double cy = std::cos(state.yaw), sy = std::sin(state.yaw);
    Eigen::Matrix3d rot;
    rot << cy, -sy, 0, sy, cy, 0, 0, 0, 1;
    const Vector3d centroid(state.x, state.y, model.height / 2.0);
    const Vector3d vel(state.vx, state.vy, 0.0);

    double total_area = 0;
    for (const auto& f : model.facets) total_area += f.area();

    Rng rng(derive_seed(opt.seed, "scene.dense"));
    std::vector<Scatterer> out;
    out.reserve(model.dense_count > 0 ? model.dense_count + 12 : model.facets.size());

    for (const auto& f : model.facets) {
        const Vector3d n_world = rot * f.normal();
        auto emit = [&](const Vector3d& body_point, double amp_scale) {
            Scatterer s;
            s.position = centroid + rot * body_point;
            const Vector3d offset = s.position - centroid;
            const Vector3d v_rot(-state.omega * offset.y(), state.omega * offset.x(), 0.0);
            const Vector3d v_point = vel + v_rot;
            const Vector3d to_sensor = sensor_pos - s.position;
            const double r = to_sensor.norm();
            const Vector3d u = r > 0 ? Vector3d(to_sensor / r) : Vector3d(1, 0, 0);
            s.radial_velocity = -u.dot(v_point);  // receding positive
            const double cos_inc = n_world.dot(u);
            s.visible = !opt.self_shadowing || cos_inc > 0.0;
            const double inc = std::acos(std::clamp(cos_inc, 0.0, 1.0));
            s.amplitude =
                f.base_reflectivity * std::sqrt(facet_rcs(f, opt.wavelength, inc)) * amp_scale;
            out.push_back(s);
        };

        if (model.dense_count <= 0) {
            emit(f.centroid(), 1.0);
        } else {
            const int n = std::max(
                1, static_cast<int>(std::lround(model.dense_count * f.area() / total_area)));
            for (int i = 0; i < n; ++i) {
                const double r1 = rng.uniform(), r2 = rng.uniform();
                const double su = std::sqrt(r1);
                const Vector3d p =
                    (1 - su) * f.v0 + su * (1 - r2) * f.v1 + su * r2 * f.v2;
                emit(p, 1.0 / std::sqrt(double(n)));
            }
        }
    }
    return out;
}

std::vector<Vector3d> cuboid_corners(const TargetModel& model, const TargetState& state) {
    const double cy = std::cos(state.yaw), sy = std::sin(state.yaw);
    Eigen::Matrix3d rot;
    rot << cy, -sy, 0, sy, cy, 0, 0, 0, 1;
    const Vector3d centroid(state.x, state.y, model.height / 2.0);
    std::vector<Vector3d> corners;
    for (int sx : {-1, 1})
        for (int sy2 : {-1, 1})
            for (int sz : {-1, 1})
                corners.push_back(centroid + rot * Vector3d(sx * model.length / 2,
                                                            sy2 * model.width / 2,
                                                            sz * model.height / 2));
    return corners;
}

}  // namespace rcisar

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rcisar/scene.hpp"

using namespace rcisar;

namespace {

// ray-triangle intersection (Moller-Trumbore), used as the occlusion oracle
bool ray_hits_triangle(const Vector3d& origin, const Vector3d& dir, const Vector3d& v0,
                       const Vector3d& v1, const Vector3d& v2, double t_max) {
    const Vector3d e1 = v1 - v0, e2 = v2 - v0;
    const Vector3d p = dir.cross(e2);
    const double det = e1.dot(p);
    if (std::abs(det) < 1e-12) return false;
    const double inv = 1.0 / det;
    const Vector3d s = origin - v0;
    const double u = s.dot(p) * inv;
    if (u < -1e-9 || u > 1 + 1e-9) return false;
    const Vector3d q = s.cross(e1);
    const double v = dir.dot(q) * inv;
    if (v < -1e-9 || u + v > 1 + 1e-9) return false;
    const double t = e2.dot(q) * inv;
    return t > 1e-6 && t < t_max - 1e-6;
}

}  // namespace

TEST_CASE("canonical trajectory endpoints match the junction coordinates") {
    struct Expect {
        TrajectoryKind kind;
        double sx, sy, ex, ey;
    };
    const Expect cases[] = {
        {TrajectoryKind::SSUT, 20.0, 39.5, 20.0, 35.4},
        {TrajectoryKind::NNUT, 58.0, 39.0, 58.0, 42.6},
        {TrajectoryKind::ENRT, 39.0, 20.0, 58.0, 42.6},
        {TrajectoryKind::WSRT, 39.0, 58.0, 20.0, 35.4},
    };
    for (const auto& c : cases) {
        CAPTURE(to_string(c.kind));
        const auto spec = TrajectorySpec::canonical(c.kind);
        const Trajectory traj(spec);
        const auto s0 = traj.state_at(0.0);
        const auto s1 = traj.state_at(spec.duration);
        CHECK(s0.x == doctest::Approx(c.sx).epsilon(1e-12));
        CHECK(s0.y == doctest::Approx(c.sy).epsilon(1e-12));
        CHECK(s1.x == doctest::Approx(c.ex).epsilon(1e-9));
        CHECK(s1.y == doctest::Approx(c.ey).epsilon(1e-9));
        CHECK(traj.path_length() == doctest::Approx(36.0).epsilon(1e-9));
    }
}

TEST_CASE("constant speed and C1 continuity along every trajectory") {
    for (auto kind : {TrajectoryKind::SSUT, TrajectoryKind::NNUT, TrajectoryKind::ENRT,
                      TrajectoryKind::WSRT}) {
        CAPTURE(to_string(kind));
        const Trajectory traj(TrajectorySpec::canonical(kind));
        const double eps = 1e-4;
        for (int i = 0; i <= 200; ++i) {
            const double t = 6.0 * i / 200.0;
            const auto st = traj.state_at(t);
            CHECK(st.speed() == doctest::Approx(6.0).epsilon(1e-9));
            if (t + eps <= 6.0) {
                const auto st2 = traj.state_at(t + eps);
                const double step = std::hypot(st2.x - st.x, st2.y - st.y);
                CHECK(step <= 6.0 * eps + 1e-9);
                // velocity continuity (bounded by the tightest arc)
                CHECK(std::hypot(st2.vx - st.vx, st2.vy - st.vy) <= 3.5 * 6.0 * eps + 1e-9);
            }
        }
    }
}

TEST_CASE("returned omega matches the differentiated heading on arc segments") {
    for (auto kind : {TrajectoryKind::SSUT, TrajectoryKind::ENRT}) {
        const Trajectory traj(TrajectorySpec::canonical(kind));
        for (const auto& seg : traj.segments()) {
            if (seg.omega == 0.0) continue;
            const double h = 1e-6;
            for (double f : {0.25, 0.5, 0.75}) {
                const double t = seg.t0 + f * (seg.t1 - seg.t0);
                const auto a = traj.state_at(t - h);
                const auto b = traj.state_at(t + h);
                const double dyaw = wrap_pi(std::atan2(b.vy, b.vx) - std::atan2(a.vy, a.vx));
                CHECK(dyaw / (2 * h) == doctest::Approx(traj.state_at(t).omega).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("sample_state rejects out-of-range time") {
    const auto spec = TrajectorySpec::canonical(TrajectoryKind::SSUT);
    CHECK_THROWS_AS(sample_state(spec, -0.5), std::domain_error);
    CHECK_THROWS_AS(sample_state(spec, 6.5), std::domain_error);
    CHECK_NOTHROW(sample_state(spec, 0.0));
    CHECK_NOTHROW(sample_state(spec, 6.0));
}

TEST_CASE("cuboid corner placement under yaw") {
    const auto model = TargetModel::cuboid(4.7, 1.8, 1.4);
    TargetState st;
    st.x = 0;
    st.y = 0;
    st.yaw = 0;
    auto corners = cuboid_corners(model, st);
    auto has = [&](const std::vector<Vector3d>& cs, double x, double y, double z) {
        for (const auto& c : cs)
            if ((c - Vector3d(x, y, z)).norm() < 1e-9) return true;
        return false;
    };
    CHECK(has(corners, 2.35, 0.9, 1.4));  // top front right, centroid riding at 0.7 m

    st.yaw = kPi / 2;
    CHECK(has(cuboid_corners(model, st), -0.9, 2.35, 1.4));
}

TEST_CASE("scatterer rigid-body property under trajectory evolution") {
    const auto model = TargetModel::cuboid();
    const Trajectory traj(TrajectorySpec::canonical(TrajectoryKind::ENRT));
    SnapshotOptions opt;
    opt.self_shadowing = false;
    const Vector3d sensor(12.35, 42.6, 0.1);

    const auto ref = scatterer_snapshot(model, traj.state_at(0.0), sensor, opt);
    for (double t : {1.0, 3.3, 5.9}) {
        const auto snap = scatterer_snapshot(model, traj.state_at(t), sensor, opt);
        REQUIRE(snap.size() == ref.size());
        for (size_t i = 0; i < ref.size(); ++i) {
            for (size_t j = i + 1; j < ref.size(); ++j) {
                const double d0 = (ref[i].position - ref[j].position).norm();
                const double d1 = (snap[i].position - snap[j].position).norm();
                CHECK(std::abs(d0 - d1) < 1e-9);
            }
        }
    }
}

TEST_CASE("facet RCS follows the flat-plate formula with cos^2 taper") {
    Facet f{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, 1.0};
    const double lambda = kSpeedOfLight / 77e9;
    const double area = 0.5;

    CHECK(facet_rcs(f, lambda, 0.0) ==
          doctest::Approx(4.0 * kPi * area * area / (lambda * lambda)).epsilon(1e-12));
    CHECK(facet_rcs(f, lambda, kPi / 2) == 0.0);

    Facet degenerate{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, 1.0};
    CHECK(facet_rcs(degenerate, lambda, 0.3) == 0.0);

    double prev = facet_rcs(f, lambda, 0.0);
    for (double th = 0.1; th < kPi / 2; th += 0.1) {
        const double cur = facet_rcs(f, lambda, th);
        CHECK(cur < prev);
        prev = cur;
    }
    CHECK_THROWS(facet_rcs(f, -1.0, 0.0));
}

TEST_CASE("visibility agrees with a ray-facet occlusion oracle") {
    const auto model = TargetModel::cuboid();
    SnapshotOptions opt;
    opt.self_shadowing = true;

    Rng rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        TargetState st;
        st.x = rng.uniform(-5, 5);
        st.y = rng.uniform(-5, 5);
        st.yaw = rng.uniform(-kPi, kPi);
        const double bearing = rng.uniform(-kPi, kPi);
        const Vector3d sensor(st.x + rng.uniform(10, 40) * std::cos(bearing),
                              st.y + rng.uniform(10, 40) * std::sin(bearing),
                              rng.uniform(0.1, 2.0));
        const auto snap = scatterer_snapshot(model, st, sensor, opt);
        REQUIRE(snap.size() == 12);

        const double cy = std::cos(st.yaw), sy = std::sin(st.yaw);
        Eigen::Matrix3d rot;
        rot << cy, -sy, 0, sy, cy, 0, 0, 0, 1;
        const Vector3d centroid(st.x, st.y, model.height / 2);
        for (size_t i = 0; i < snap.size(); ++i) {
            const auto& facet = model.facets[i];
            // target point nudged off the surface along the outward normal so
            // the facet's own plane cannot shadow it
            const Vector3d target =
                centroid + rot * (facet.centroid() + 1e-4 * facet.normal());
            const Vector3d dir_raw = target - sensor;
            const double dist = dir_raw.norm();
            const Vector3d dir = dir_raw / dist;
            bool blocked = false;
            for (size_t j = 0; j < model.facets.size() && !blocked; ++j) {
                const auto& g = model.facets[j];
                blocked = ray_hits_triangle(sensor, dir, centroid + rot * g.v0,
                                            centroid + rot * g.v1, centroid + rot * g.v2, dist);
            }
            CAPTURE(trial);
            CAPTURE(i);
            CHECK(snap[i].visible == !blocked);
        }
    }
}

TEST_CASE("south-facing sensor with shadowing sees no north-face facets") {
    const auto model = TargetModel::cuboid();
    TargetState st;  // yaw 0: +x faces north
    st.x = 20;
    st.y = 40;
    SnapshotOptions opt;
    opt.self_shadowing = true;
    const Vector3d sensor(5.0, 40.0, 0.5);  // due south of the target

    const auto snap = scatterer_snapshot(model, st, sensor, opt);
    for (size_t i = 0; i < model.facets.size(); ++i) {
        const Vector3d n = model.facets[i].normal();
        if (n.x() > 0.9) CHECK_FALSE(snap[i].visible);  // +x (north) faces
        if (n.x() < -0.9) CHECK(snap[i].visible);       // -x (south) faces
    }

    opt.self_shadowing = false;
    for (const auto& s : scatterer_snapshot(model, st, sensor, opt)) CHECK(s.visible);
}

TEST_CASE("radial velocity includes the rotational lever-arm term") {
    const auto model = TargetModel::cuboid();
    TargetState st;
    st.omega = 0.5;
    SnapshotOptions opt;
    opt.self_shadowing = false;
    const Vector3d sensor(100.0, 0.0, 0.0);

    for (const auto& s : scatterer_snapshot(model, st, sensor, opt)) {
        // pure rotation about the centroid: v = omega z_hat x offset
        const Vector3d v(-st.omega * s.position.y(), st.omega * s.position.x(), 0.0);
        const Vector3d u = (s.position - sensor).normalized();
        CHECK(s.radial_velocity == doctest::Approx(u.dot(v)).epsilon(1e-9));
    }
}

TEST_CASE("target model validation") {
    auto model = TargetModel::cuboid();
    CHECK_NOTHROW(model.validate());
    CHECK(model.facets.size() == 12);
    double area = 0;
    for (const auto& f : model.facets) {
        area += f.area();
        CHECK(f.normal().dot(f.centroid()) > 0);  // outward
    }
    CHECK(area == doctest::Approx(2 * (4.7 * 1.8 + 4.7 * 1.4 + 1.8 * 1.4)).epsilon(1e-12));

    model.facets.pop_back();
    CHECK_THROWS(model.validate());
}

TEST_CASE("dense point cloud mode samples facet interiors deterministically") {
    auto model = TargetModel::cuboid();
    model.dense_count = 300;
    TargetState st;
    SnapshotOptions opt;
    opt.self_shadowing = false;
    opt.seed = 5;
    const auto snap = scatterer_snapshot(model, st, Vector3d(50, 0, 0), opt);
    CHECK(snap.size() >= 290);
    for (const auto& s : snap) {
        CHECK(std::abs(s.position.x()) <= 2.35 + 1e-9);
        CHECK(std::abs(s.position.y()) <= 0.9 + 1e-9);
        CHECK(s.position.z() >= -1e-9);
        CHECK(s.position.z() <= 1.4 + 1e-9);
    }
    const auto snap2 = scatterer_snapshot(model, st, Vector3d(50, 0, 0), opt);
    REQUIRE(snap2.size() == snap.size());
    for (size_t i = 0; i < snap.size(); ++i)
        CHECK((snap[i].position - snap2[i].position).norm() == 0.0);
}

TEST_CASE("custom waypoint trajectory is C1 with fillets") {
    TrajectorySpec spec;
    spec.kind = TrajectoryKind::Custom;
    spec.speed = 6.0;
    spec.fillet_radius = 4.0;
    spec.waypoints = {{0, 0, 0}, {30, 0, 0}, {30, 30, 0}};
    const Trajectory traj(spec);
    CHECK(traj.state_at(0).x == doctest::Approx(0.0));
    const auto end = traj.state_at(traj.duration());
    CHECK(end.x == doctest::Approx(30.0).epsilon(1e-9));
    CHECK(end.y == doctest::Approx(30.0).epsilon(1e-9));
    for (int i = 0; i <= 100; ++i) {
        const auto st = traj.state_at(traj.duration() * i / 100.0);
        CHECK(st.speed() == doctest::Approx(6.0).epsilon(1e-9));
    }
}

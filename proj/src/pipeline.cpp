#include "rcisar/pipeline.hpp"

#include <cinttypes>
#include <cmath>
#include <fstream>
#include <sstream>

namespace rcisar {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

FusionNoise make_noise(const ScenarioConfig& cfg) {
    FusionNoise n;
    n.sigma_a = cfg.fusion.sigma_a;
    n.sigma_alpha = cfg.fusion.sigma_alpha;
    n.T = cfg.radar.frame_interval;
    const double sr = cfg.fusion.sigma_r > 0 ? cfg.fusion.sigma_r : cfg.radar.range_resolution();
    const double sf = cfg.fusion.sigma_fd > 0 ? cfg.fusion.sigma_fd : cfg.radar.doppler_resolution();
    n.r_diag = Eigen::Vector3d(sr * sr, sf * sf, cfg.fusion.sigma_pv * cfg.fusion.sigma_pv);
    n.heading_noise = cfg.fusion.heading_noise;
    n.joseph_form = cfg.fusion.joseph_form;
    return n;
}

SensorGeometry make_geometry(const ScenarioConfig& cfg) {
    SensorGeometry g;
    const Vector3d radar_pos = cfg.ego.radar_position();
    g.radar_xy = {radar_pos.x(), radar_pos.y()};
    g.fc = cfg.radar.fc;
    g.camera_pos = cfg.ego.camera_position();
    g.camera_yaw = cfg.ego.camera_yaw;
    g.intrinsics = cfg.intrinsics;
    g.camera_projection =
        projection_matrix(cfg.intrinsics, CameraExtrinsics::from_mount(g.camera_pos, g.camera_yaw));
    g.target_ref_height = cfg.target.height / 2.0;
    g.paper_doppler = cfg.fusion.paper_doppler;
    return g;
}

struct StageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace

RunResult run_scenario(const ScenarioConfig& cfg, const std::filesystem::path& out_dir) {
    cfg.validate();
    const bool writing = !out_dir.empty();
    if (writing) std::filesystem::create_directories(out_dir);

    const Trajectory traj(cfg.trajectory);
    const Vector3d radar_pos = cfg.ego.radar_position();
    const SensorGeometry geom = make_geometry(cfg);
    const FusionNoise noise = make_noise(cfg);
    const double lambda = cfg.radar.lambda();

    SectorRegion coverage;
    coverage.origin = geom.radar_xy;
    coverage.boresight = 0.0;
    coverage.half_width = kPi / 3.0;  // 120 deg azimuth field of view
    coverage.r_min = cfg.clutter.min_range;
    coverage.r_max = cfg.radar.instrumented_range;

    SnapshotOptions snap_opt;
    snap_opt.wavelength = lambda;
    snap_opt.self_shadowing = cfg.self_shadowing;

    RunResult result;
    result.frames.reserve(cfg.frames);

    Tracker tracker(noise, geom, cfg.gate);
    CompensationParams pending_comp;  // emitted at k-1 for this frame

    std::vector<FrameImageDecision> decisions;
    std::vector<TrackErrorSample> errors;

    std::ofstream f_gt, f_track, f_radar, f_camera;
    if (writing) {
        save_config(out_dir / "scenario.cfg", cfg);
        f_gt.open(out_dir / "ground_truth.csv");
        f_gt << "t,x,y,vx,vy,omega,yaw\n";
        f_track.open(out_dir / "track.csv");
        f_track << "k,initialized,x,y,vx,vy,omega,P00,P11,P22,P33,P44";
        for (int m = 1; m <= 3; ++m)
            for (int n = 1; n <= 5; ++n) f_track << ",K" << m << n;
        f_track << ",radar_accepted,radar_rejected,camera_accepted,camera_rejected,cond_S\n";
        f_radar.open(out_dir / "radar_measurements.csv");
        f_radar << "k,range_m,doppler_hz,elevation_rad,cluster_size\n";
        f_camera.open(out_dir / "camera_detections.csv");
        f_camera << "k,pu,pv,umin,umax,vmin,vmax,genuine\n";
    }

    for (int k = 0; k < cfg.frames; ++k) {
        FrameLog log;
        log.k = k;
        log.t = k * cfg.radar.frame_interval;

        const char* stage = "scene";
        try {
            log.gt = traj.state_at(log.t);
            snap_opt.seed = derive_seed(cfg.seed, "scene.dense", k);
            const auto scatterers =
                scatterer_snapshot(cfg.target, log.gt, radar_pos, snap_opt);

            stage = "clutter";
            Rng clutter_rng(derive_seed(cfg.seed, "clutter", k));
            const ClutterField clutter = spawn_clutter(cfg.clutter, coverage, clutter_rng);

            stage = "radar_synth";
            const RadarCube cube = synthesize_cpi(cfg.radar, scatterers, clutter, radar_pos,
                                                  derive_seed(cfg.seed, "radar", k), k);

            stage = "isar.measure";
            const RadarCube stretched = stretch_process(cube, cfg.stretch);
            const IsarImage rd1 = form_image(stretched, cfg.stretch, 0);
            std::optional<IsarImage> rd2;
            std::optional<Interferogram> interf;
            if (cfg.radar.n_channels == 2) {
                rd2 = form_image(stretched, cfg.stretch, 1);
                interf = interferogram(rd1, *rd2, lambda, cfg.radar.baseline);
            }
            auto detections = os_cfar_detect(rd1, cfg.radar.pfa, cfg.cfar.train_per_side,
                                             cfg.cfar.guard_per_side, cfg.cfar.rank);
            // keep detections inside the instrumented range
            std::erase_if(detections, [&](const Detection& d) {
                const double r = rd1.range_axis[d.col];
                return r < 1.0 || r > cfg.radar.instrumented_range;
            });
            auto radar_candidates = clusters_to_measurements(
                detections, rd1, interf ? &*interf : nullptr, cfg.cfar.link_distance);
            log.radar_meas =
                radar_candidates.empty() ? std::nullopt
                                         : std::optional<RadarMeasurement>(radar_candidates[0]);

            stage = "camera";
            Rng cam_rng(derive_seed(cfg.seed, "camera", k));
            const auto corners = cuboid_corners(cfg.target, log.gt);
            const auto cam_dets =
                detect_target(corners, geom.camera_projection, cfg.intrinsics, geom.camera_pos,
                              k, cfg.camera, cam_rng);
            log.camera_detections = static_cast<int>(cam_dets.size());
            if (writing) {
                for (const auto& d : cam_dets)
                    f_camera << k << ',' << fmt(d.centroid.u) << ',' << fmt(d.centroid.v) << ','
                             << fmt(d.box.umin) << ',' << fmt(d.box.umax) << ','
                             << fmt(d.box.vmin) << ',' << fmt(d.box.vmax) << ','
                             << (d.genuine ? 1 : 0) << '\n';
            }

            stage = "fusion";
            const bool was_initialized = tracker.initialized();
            TrackRecord rec = tracker.step(k, radar_candidates, cam_dets);
            if (!was_initialized && tracker.initialized() && result.init_frame < 0)
                result.init_frame = k;
            log.track = rec;

            stage = "isar.image";
            log.gt_comp = compensation_from_state(log.gt, geom.radar_xy,
                                                  cfg.target.height / 2.0, radar_pos.z());
            log.fused_comp = pending_comp;

            const bool gt_ok = log.gt_comp.valid &&
                               image_gate(log.gt_comp.omega_eff, cfg.image.gate_omega) &&
                               log.gt_comp.r0 <= cfg.radar.instrumented_range;
            const bool fused_ok = pending_comp.valid &&
                                  image_gate(pending_comp.omega_eff, cfg.image.gate_omega) &&
                                  pending_comp.r0 <= cfg.radar.instrumented_range;

            std::optional<IsarImage> gt_img, fused_img;
            if (gt_ok) {
                const RadarCube comp =
                    compensate_and_stretch(cube, cfg.stretch, log.gt_comp.r0, log.gt_comp.vr);
                gt_img = form_image(comp, cfg.stretch, 0, log.gt_comp.omega_eff,
                                    cfg.image.gate_omega);
            }
            if (fused_ok) {
                const RadarCube comp =
                    compensate_and_stretch(cube, cfg.stretch, pending_comp.r0, pending_comp.vr);
                fused_img = form_image(comp, cfg.stretch, 0, pending_comp.omega_eff,
                                       cfg.image.gate_omega);
                log.entropy_fused = image_entropy(fused_img->data);
                log.entropy_uncompensated = image_entropy(rd1.data);
            }
            log.gt_image = gt_img.has_value();
            log.fused_image = fused_img.has_value();

            stage = "metrics";
            FrameImageDecision dec;
            dec.gt_image = log.gt_image;
            dec.fused_image = log.fused_image;
            if (gt_img && fused_img) {
                const auto a = regrid_metric(*gt_img, log.gt_comp.r0, cfg.image.range_halfspan,
                                             cfg.image.cross_halfspan, cfg.image.grid_rows,
                                             cfg.image.grid_cols);
                const auto b = regrid_metric(*fused_img, pending_comp.r0,
                                             cfg.image.range_halfspan, cfg.image.cross_halfspan,
                                             cfg.image.grid_rows, cfg.image.grid_cols);
                dec.ssim = ssim(to_db_power(a), to_db_power(b));
                log.ssim_value = dec.ssim;
            }
            decisions.push_back(dec);
            if (rec.initialized) {
                errors.push_back({rec.post.x(0) - log.gt.x, rec.post.x(1) - log.gt.y,
                                  rec.post.x(4) - log.gt.omega});
            }

            if (writing && cfg.dump_images) {
                const auto frames_dir = out_dir / "frames";
                std::filesystem::create_directories(frames_dir);
                char name[64];
                std::snprintf(name, sizeof(name), "rd_%03d", k);
                write_image_artifacts(frames_dir / name, rd1);
                if (fused_img) {
                    std::snprintf(name, sizeof(name), "isar_fused_%03d", k);
                    write_image_artifacts(frames_dir / name, *fused_img);
                }
                if (gt_img) {
                    std::snprintf(name, sizeof(name), "isar_gt_%03d", k);
                    write_image_artifacts(frames_dir / name, *gt_img);
                }
            }

            pending_comp = rec.emitted;
        } catch (const std::exception& ex) {
            throw StageError("frame " + std::to_string(k) + " stage " + stage + ": " +
                             ex.what());
        }

        if (writing) {
            f_gt << fmt(log.t) << ',' << fmt(log.gt.x) << ',' << fmt(log.gt.y) << ','
                 << fmt(log.gt.vx) << ',' << fmt(log.gt.vy) << ',' << fmt(log.gt.omega) << ','
                 << fmt(log.gt.yaw) << '\n';
            const auto& rec = log.track;
            f_track << k << ',' << (rec.initialized ? 1 : 0);
            for (int i = 0; i < 5; ++i) f_track << ',' << fmt(rec.post.x(i));
            for (int i = 0; i < 5; ++i) f_track << ',' << fmt(rec.post.P(i, i));
            for (int m = 0; m < 3; ++m)
                for (int n = 0; n < 5; ++n) f_track << ',' << fmt(rec.gains.gain(m, n));
            f_track << ',' << rec.gate_log.radar_accepted << ',' << rec.gate_log.radar_rejected
                    << ',' << rec.gate_log.camera_accepted << ','
                    << rec.gate_log.camera_rejected << ',' << fmt(rec.gains.innovation_cond)
                    << '\n';
            if (log.radar_meas) {
                const auto& m = *log.radar_meas;
                f_radar << k << ',' << fmt(m.range_m) << ',' << fmt(m.doppler_hz) << ','
                        << (m.elevation_rad ? fmt(*m.elevation_rad) : std::string("nan")) << ','
                        << m.cluster_size << '\n';
            }
        }

        result.frames.push_back(std::move(log));
    }

    result.report =
        tabulate_run(to_string(cfg.trajectory.kind), decisions, errors);

    if (writing) {
        std::ofstream rep(out_dir / "report.txt");
        rep << report_to_text({result.report});
        std::ofstream repc(out_dir / "report.csv");
        repc << report_to_csv({result.report});
    }
    return result;
}

TrackRmse track_rmse(const RunResult& run, int settle_frames) {
    TrackRmse out;
    double sx = 0, sy = 0, so = 0;
    int n = 0;
    for (const auto& f : run.frames) {
        if (!f.track.initialized) continue;
        if (run.init_frame >= 0 && f.k < run.init_frame + settle_frames) continue;
        const double ex = f.track.post.x(0) - f.gt.x;
        const double ey = f.track.post.x(1) - f.gt.y;
        const double eo = f.track.post.x(4) - f.gt.omega;
        sx += ex * ex;
        sy += ey * ey;
        so += eo * eo;
        ++n;
    }
    if (n > 0) {
        out.x = std::sqrt(sx / n);
        out.y = std::sqrt(sy / n);
        out.pos = std::sqrt((sx + sy) / n);
        out.omega = std::sqrt(so / n);
        out.samples = n;
    }
    return out;
}

namespace {

TrackRmse average_rmse(const ScenarioConfig& cfg, int n_seeds) {
    TrackRmse acc;
    double sx = 0, sy = 0, sp = 0, so = 0;
    for (int s = 0; s < n_seeds; ++s) {
        ScenarioConfig c = cfg;
        c.seed = cfg.seed + 1000ull * (s + 1);
        const RunResult run = run_scenario(c);
        const TrackRmse r = track_rmse(run);
        sx += r.x;
        sy += r.y;
        sp += r.pos;
        so += r.omega;
        acc.samples += r.samples;
    }
    acc.x = sx / n_seeds;
    acc.y = sy / n_seeds;
    acc.pos = sp / n_seeds;
    acc.omega = so / n_seeds;
    return acc;
}

}  // namespace

std::vector<SweepPoint> run_camera_sweep(const ScenarioConfig& base,
                                         const std::vector<double>& camera_pds, int n_seeds) {
    std::vector<SweepPoint> out;
    for (double pd : camera_pds) {
        ScenarioConfig cfg = base;
        cfg.camera.pd = pd;
        SweepPoint pt;
        pt.camera_pd = pd;
        pt.radar_pd = cfg.radar.pd;
        pt.radar_pfa = cfg.radar.pfa;
        pt.rmse = average_rmse(cfg, n_seeds);
        pt.seeds = n_seeds;
        out.push_back(pt);
    }
    return out;
}

std::vector<SweepPoint> run_radar_sweep(const ScenarioConfig& base,
                                        const std::vector<std::pair<double, double>>& pd_pfa,
                                        int n_seeds) {
    std::vector<SweepPoint> out;
    for (const auto& [pd, pfa] : pd_pfa) {
        ScenarioConfig cfg = base;
        cfg.radar.pd = pd;
        cfg.radar.pfa = pfa;
        SweepPoint pt;
        pt.camera_pd = cfg.camera.pd;
        pt.radar_pd = pd;
        pt.radar_pfa = pfa;
        pt.rmse = average_rmse(cfg, n_seeds);
        pt.seeds = n_seeds;
        out.push_back(pt);
    }
    return out;
}

std::string sweep_to_text(const std::vector<SweepPoint>& points, bool camera_sweep) {
    std::ostringstream os;
    if (camera_sweep)
        os << "camera_pd | rmse_x | rmse_y | rmse_pos | rmse_omega\n";
    else
        os << "radar_pd | radar_pfa | rmse_x | rmse_y | rmse_pos | rmse_omega\n";
    char buf[160];
    for (const auto& p : points) {
        if (camera_sweep)
            std::snprintf(buf, sizeof(buf), "%9.2f | %6.3f | %6.3f | %8.3f | %10.4f\n",
                          p.camera_pd, p.rmse.x, p.rmse.y, p.rmse.pos, p.rmse.omega);
        else
            std::snprintf(buf, sizeof(buf), "%8.2f | %9.1e | %6.3f | %6.3f | %8.3f | %10.4f\n",
                          p.radar_pd, p.radar_pfa, p.rmse.x, p.rmse.y, p.rmse.pos, p.rmse.omega);
        os << buf;
    }
    return os.str();
}

RadarCube ingest_cube(const std::filesystem::path& path) { return read_cube(path); }

void write_pgm16(const std::filesystem::path& path, const Eigen::MatrixXd& db_image,
                 double span_db, const std::vector<std::string>& comments) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write image: " + path.string());
    f << "P5\n";
    for (const auto& c : comments) f << "# " << c << '\n';
    f << db_image.cols() << ' ' << db_image.rows() << "\n65535\n";
    for (int r = 0; r < db_image.rows(); ++r) {
        for (int c = 0; c < db_image.cols(); ++c) {
            const double x = std::clamp(db_image(r, c) / span_db, 0.0, 1.0);
            const auto v = static_cast<uint16_t>(std::lround(x * 65535.0));
            // PGM 16-bit samples are big-endian
            const unsigned char hi = static_cast<unsigned char>(v >> 8);
            const unsigned char lo = static_cast<unsigned char>(v & 0xff);
            f.put(static_cast<char>(hi));
            f.put(static_cast<char>(lo));
        }
    }
}

void write_image_artifacts(const std::filesystem::path& base_path, const IsarImage& img,
                           double floor_db) {
    const Eigen::MatrixXd db = to_db_magnitude(img.data, floor_db);
    std::vector<std::string> comments;
    comments.push_back("rcisar image, magnitude dB, span " + fmt(floor_db));
    comments.push_back("cpi " + std::to_string(img.cpi_index) + " channel " +
                       std::to_string(img.channel));
    comments.push_back("range_m " + fmt(img.range_axis.front()) + " .. " +
                       fmt(img.range_axis.back()));
    if (img.has_crossrange)
        comments.push_back("crossrange_m " + fmt(img.crossrange_axis.front()) + " .. " +
                           fmt(img.crossrange_axis.back()) + " omega " + fmt(img.omega));
    else
        comments.push_back("doppler_hz " + fmt(img.doppler_axis.front()) + " .. " +
                           fmt(img.doppler_axis.back()));
    write_pgm16(base_path.string() + ".pgm", db, floor_db, comments);

    std::ofstream ax(base_path.string() + ".axes.csv");
    ax << "axis,index,value\n";
    for (size_t i = 0; i < img.range_axis.size(); ++i)
        ax << "range," << i << ',' << fmt(img.range_axis[i]) << '\n';
    for (size_t i = 0; i < img.doppler_axis.size(); ++i)
        ax << "doppler," << i << ',' << fmt(img.doppler_axis[i]) << '\n';
    for (size_t i = 0; i < img.crossrange_axis.size(); ++i)
        ax << "crossrange," << i << ',' << fmt(img.crossrange_axis[i]) << '\n';
}

}  // namespace rcisar

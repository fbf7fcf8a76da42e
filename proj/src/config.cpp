#include "rcisar/config.hpp"

#include <cinttypes>
#include <fstream>
#include <map>
#include <sstream>

namespace rcisar {

namespace {

constexpr int kConfigVersion = 1;

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct KvReader {
    std::map<std::string, std::string> kv;
    mutable std::map<std::string, bool> seen;

    bool has(const std::string& key) const { return kv.count(key) > 0; }

    double num(const std::string& key, double fallback) const {
        auto it = kv.find(key);
        if (it == kv.end()) return fallback;
        seen[key] = true;
        return std::stod(it->second);
    }
    int integer(const std::string& key, int fallback) const {
        return static_cast<int>(num(key, fallback));
    }
    uint64_t u64(const std::string& key, uint64_t fallback) const {
        auto it = kv.find(key);
        if (it == kv.end()) return fallback;
        seen[key] = true;
        return std::stoull(it->second);
    }
    bool boolean(const std::string& key, bool fallback) const {
        auto it = kv.find(key);
        if (it == kv.end()) return fallback;
        seen[key] = true;
        if (it->second == "true" || it->second == "1") return true;
        if (it->second == "false" || it->second == "0") return false;
        throw ConfigError("bad boolean for " + key + ": " + it->second);
    }
    std::string text(const std::string& key, const std::string& fallback) const {
        auto it = kv.find(key);
        if (it == kv.end()) return fallback;
        seen[key] = true;
        return it->second;
    }
    void reject_unknown() const {
        for (const auto& [k, v] : kv)
            if (!seen.count(k)) throw ConfigError("unknown config key: " + k);
    }
};

}  // namespace

void ScenarioConfig::validate() const {
    if (frames <= 0) throw ConfigError("frames must be positive");
    radar.validate();
    stretch.validate(radar);
    intrinsics.validate();
    target.validate();
    if (trajectory.speed <= 0 || trajectory.duration <= 0)
        throw ConfigError("trajectory speed and duration must be positive");
    if (camera.pd < 0 || camera.pd > 1 || camera.fp_rate < 0 || camera.fp_rate > 1)
        throw ConfigError("camera probabilities must be in [0,1]");
    if (image.gate_omega <= 0) throw ConfigError("image gate threshold must be positive");
}

ScenarioConfig ScenarioConfig::preset(TrajectoryKind kind) {
    ScenarioConfig cfg;
    cfg.trajectory = TrajectorySpec::canonical(kind);
    // Facet returns integrate ~48 dB above a single sample; this floor keeps
    // per-image point SNR near 45 dB so that windowed sidelobes stay down.
    cfg.radar.noise_power = 1.0e9;
    cfg.stretch.hann_window = true;
    cfg.cfar.train_per_side = 4;
    cfg.cfar.link_distance = 5;
    // reduced point cloud: enough scatterers that the vehicle clusters as one
    // contiguous blob even when a turn spreads it across Doppler
    cfg.target.dense_count = 96;
    cfg.clutter.n = 40;
    cfg.clutter.p = 0.5;
    // near the CFAR threshold at pfa 1e-6, so the false-alarm setting of the
    // sweep modulates how much clutter becomes visible
    cfg.clutter.amplitude = 350.0;
    // measurement sigmas sized for the extended target: the clustered
    // centroid wanders over the visible extent as the aspect changes, which
    // dominates the raw resolution terms
    cfg.fusion.sigma_r = 0.75;
    cfg.fusion.sigma_pv = 12.0;
    cfg.fusion.sigma_alpha = 5.0;
    cfg.gate.pixel_floor = 60.0;
    return cfg;
}

std::string serialize_config(const ScenarioConfig& c) {
    std::ostringstream os;
    auto put = [&](const std::string& key, const std::string& value) {
        os << key << ' ' << value << '\n';
    };
    auto putd = [&](const std::string& key, double v) { put(key, fmt_double(v)); };
    auto puti = [&](const std::string& key, int64_t v) { put(key, std::to_string(v)); };
    auto putb = [&](const std::string& key, bool v) { put(key, v ? "true" : "false"); };

    put("version", std::to_string(kConfigVersion));
    put("scenario.seed", std::to_string(c.seed));
    puti("scenario.frames", c.frames);
    putb("scenario.dump_images", c.dump_images);

    put("trajectory.kind", to_string(c.trajectory.kind));
    putd("trajectory.speed", c.trajectory.speed);
    putd("trajectory.duration", c.trajectory.duration);
    putd("trajectory.start.x", c.trajectory.start_position.x());
    putd("trajectory.start.y", c.trajectory.start_position.y());
    putd("trajectory.start.z", c.trajectory.start_position.z());
    putd("trajectory.end.x", c.trajectory.end_position.x());
    putd("trajectory.end.y", c.trajectory.end_position.y());
    putd("trajectory.end.z", c.trajectory.end_position.z());
    putd("trajectory.fillet_radius", c.trajectory.fillet_radius);
    puti("trajectory.waypoints", static_cast<int64_t>(c.trajectory.waypoints.size()));
    for (size_t i = 0; i < c.trajectory.waypoints.size(); ++i) {
        const std::string p = "trajectory.waypoint." + std::to_string(i);
        putd(p + ".x", c.trajectory.waypoints[i].x());
        putd(p + ".y", c.trajectory.waypoints[i].y());
        putd(p + ".z", c.trajectory.waypoints[i].z());
    }

    putd("target.length", c.target.length);
    putd("target.width", c.target.width);
    putd("target.height", c.target.height);
    puti("target.dense_count", c.target.dense_count);
    putb("target.self_shadowing", c.self_shadowing);

    putd("ego.center.x", c.ego.ego_center.x());
    putd("ego.center.y", c.ego.ego_center.y());
    putd("ego.center.z", c.ego.ego_center.z());
    putd("ego.length", c.ego.ego_dims.x());
    putd("ego.width", c.ego.ego_dims.y());
    putd("ego.height", c.ego.ego_dims.z());
    putd("ego.wheelbase", c.ego.wheelbase);
    putd("ego.front_overhang", c.ego.front_overhang);
    putd("ego.radar_height", c.ego.radar_height);
    putd("ego.camera_top_drop", c.ego.camera_top_drop);
    putd("ego.camera_yaw", c.ego.camera_yaw);

    putd("radar.fc", c.radar.fc);
    putd("radar.beta", c.radar.beta);
    putd("radar.t_pri", c.radar.t_pri);
    putd("radar.t_cpi", c.radar.t_cpi);
    putd("radar.fs", c.radar.fs);
    puti("radar.n_fast", c.radar.n_fast);
    puti("radar.n_channels", c.radar.n_channels);
    putd("radar.baseline", c.radar.baseline);
    putd("radar.tx_power", c.radar.tx_power);
    putd("radar.noise_power", c.radar.noise_power);
    putd("radar.pd", c.radar.pd);
    putd("radar.pfa", c.radar.pfa);
    putd("radar.instrumented_range", c.radar.instrumented_range);
    putd("radar.frame_interval", c.radar.frame_interval);
    putb("radar.range_spreading", c.radar.range_spreading);
    putd("radar.reference_range", c.radar.reference_range);

    putd("stretch.r_ref", c.stretch.r_ref);
    putd("stretch.t_ref", c.stretch.t_ref);
    puti("stretch.nfft_fast", c.stretch.nfft_fast);
    puti("stretch.nfft_slow", c.stretch.nfft_slow);
    putb("stretch.hann_window", c.stretch.hann_window);

    puti("cfar.train_per_side", c.cfar.train_per_side);
    puti("cfar.guard_per_side", c.cfar.guard_per_side);
    puti("cfar.rank", c.cfar.rank);
    puti("cfar.link_distance", c.cfar.link_distance);

    puti("clutter.n", c.clutter.n);
    putd("clutter.p", c.clutter.p);
    putd("clutter.amplitude", c.clutter.amplitude);
    putd("clutter.z", c.clutter.z);
    putd("clutter.min_range", c.clutter.min_range);

    putd("camera.fu", c.intrinsics.fu);
    putd("camera.fv", c.intrinsics.fv);
    putd("camera.pu0", c.intrinsics.pu0);
    putd("camera.pv0", c.intrinsics.pv0);
    puti("camera.image_u", c.intrinsics.image_u);
    puti("camera.image_v", c.intrinsics.image_v);
    putd("camera.pd", c.camera.pd);
    putd("camera.fp_rate", c.camera.fp_rate);
    putd("camera.min_box_px", c.camera.min_box_px);
    putd("camera.max_range", c.camera.max_range);

    putd("fusion.sigma_a", c.fusion.sigma_a);
    putd("fusion.sigma_alpha", c.fusion.sigma_alpha);
    putd("fusion.sigma_r", c.fusion.sigma_r);
    putd("fusion.sigma_fd", c.fusion.sigma_fd);
    putd("fusion.sigma_pv", c.fusion.sigma_pv);
    putb("fusion.heading_noise", c.fusion.heading_noise);
    putb("fusion.joseph_form", c.fusion.joseph_form);
    putb("fusion.paper_doppler", c.fusion.paper_doppler);

    putd("gate.position_scale", c.gate.position_scale);
    putd("gate.position_floor", c.gate.position_floor);
    putd("gate.position_override", c.gate.position_override);
    putd("gate.pixel_scale", c.gate.pixel_scale);
    putd("gate.pixel_floor", c.gate.pixel_floor);
    putd("gate.pixel_override", c.gate.pixel_override);

    putd("image.gate_omega", c.image.gate_omega);
    putd("image.cross_halfspan", c.image.cross_halfspan);
    putd("image.range_halfspan", c.image.range_halfspan);
    puti("image.grid_rows", c.image.grid_rows);
    puti("image.grid_cols", c.image.grid_cols);

    return os.str();
}

ScenarioConfig parse_config(const std::string& text) {
    KvReader reader;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        std::string key, value;
        if (!(ls >> key)) continue;
        std::getline(ls, value);
        const auto first = value.find_first_not_of(" \t");
        if (first == std::string::npos)
            throw ConfigError("missing value at line " + std::to_string(lineno));
        value = value.substr(first);
        while (!value.empty() && (value.back() == ' ' || value.back() == '\t' ||
                                  value.back() == '\r'))
            value.pop_back();
        if (reader.kv.count(key)) throw ConfigError("duplicate config key: " + key);
        reader.kv[key] = value;
    }

    const int version = reader.integer("version", -1);
    if (version != kConfigVersion)
        throw ConfigError("unsupported config version: " + std::to_string(version));

    ScenarioConfig c;
    c.seed = reader.u64("scenario.seed", c.seed);
    c.frames = reader.integer("scenario.frames", c.frames);
    c.dump_images = reader.boolean("scenario.dump_images", c.dump_images);

    const auto kind = trajectory_kind_from_string(reader.text("trajectory.kind", "SSUT"));
    if (kind == TrajectoryKind::Custom) {
        c.trajectory.kind = kind;
    } else {
        c.trajectory = TrajectorySpec::canonical(kind);
    }
    c.trajectory.speed = reader.num("trajectory.speed", c.trajectory.speed);
    c.trajectory.duration = reader.num("trajectory.duration", c.trajectory.duration);
    c.trajectory.start_position = {reader.num("trajectory.start.x", c.trajectory.start_position.x()),
                                   reader.num("trajectory.start.y", c.trajectory.start_position.y()),
                                   reader.num("trajectory.start.z", c.trajectory.start_position.z())};
    c.trajectory.end_position = {reader.num("trajectory.end.x", c.trajectory.end_position.x()),
                                 reader.num("trajectory.end.y", c.trajectory.end_position.y()),
                                 reader.num("trajectory.end.z", c.trajectory.end_position.z())};
    c.trajectory.fillet_radius = reader.num("trajectory.fillet_radius", c.trajectory.fillet_radius);
    const int n_wp = reader.integer("trajectory.waypoints", 0);
    for (int i = 0; i < n_wp; ++i) {
        const std::string p = "trajectory.waypoint." + std::to_string(i);
        c.trajectory.waypoints.emplace_back(reader.num(p + ".x", 0), reader.num(p + ".y", 0),
                                            reader.num(p + ".z", 0));
    }

    const double tl = reader.num("target.length", c.target.length);
    const double tw = reader.num("target.width", c.target.width);
    const double th = reader.num("target.height", c.target.height);
    c.target = TargetModel::cuboid(tl, tw, th);
    c.target.dense_count = reader.integer("target.dense_count", 0);
    c.self_shadowing = reader.boolean("target.self_shadowing", c.self_shadowing);

    c.ego.ego_center = {reader.num("ego.center.x", c.ego.ego_center.x()),
                        reader.num("ego.center.y", c.ego.ego_center.y()),
                        reader.num("ego.center.z", c.ego.ego_center.z())};
    c.ego.ego_dims = {reader.num("ego.length", c.ego.ego_dims.x()),
                      reader.num("ego.width", c.ego.ego_dims.y()),
                      reader.num("ego.height", c.ego.ego_dims.z())};
    c.ego.wheelbase = reader.num("ego.wheelbase", c.ego.wheelbase);
    c.ego.front_overhang = reader.num("ego.front_overhang", c.ego.front_overhang);
    c.ego.radar_height = reader.num("ego.radar_height", c.ego.radar_height);
    c.ego.camera_top_drop = reader.num("ego.camera_top_drop", c.ego.camera_top_drop);
    c.ego.camera_yaw = reader.num("ego.camera_yaw", c.ego.camera_yaw);

    c.radar.fc = reader.num("radar.fc", c.radar.fc);
    c.radar.beta = reader.num("radar.beta", c.radar.beta);
    c.radar.t_pri = reader.num("radar.t_pri", c.radar.t_pri);
    c.radar.t_cpi = reader.num("radar.t_cpi", c.radar.t_cpi);
    c.radar.fs = reader.num("radar.fs", c.radar.fs);
    c.radar.n_fast = reader.integer("radar.n_fast", c.radar.n_fast);
    c.radar.n_channels = reader.integer("radar.n_channels", c.radar.n_channels);
    c.radar.baseline = reader.num("radar.baseline", c.radar.baseline);
    c.radar.tx_power = reader.num("radar.tx_power", c.radar.tx_power);
    c.radar.noise_power = reader.num("radar.noise_power", c.radar.noise_power);
    c.radar.pd = reader.num("radar.pd", c.radar.pd);
    c.radar.pfa = reader.num("radar.pfa", c.radar.pfa);
    c.radar.instrumented_range = reader.num("radar.instrumented_range", c.radar.instrumented_range);
    c.radar.frame_interval = reader.num("radar.frame_interval", c.radar.frame_interval);
    c.radar.range_spreading = reader.boolean("radar.range_spreading", c.radar.range_spreading);
    c.radar.reference_range = reader.num("radar.reference_range", c.radar.reference_range);

    c.stretch.r_ref = reader.num("stretch.r_ref", c.stretch.r_ref);
    c.stretch.t_ref = reader.num("stretch.t_ref", c.stretch.t_ref);
    c.stretch.nfft_fast = reader.integer("stretch.nfft_fast", c.stretch.nfft_fast);
    c.stretch.nfft_slow = reader.integer("stretch.nfft_slow", c.stretch.nfft_slow);
    c.stretch.hann_window = reader.boolean("stretch.hann_window", c.stretch.hann_window);

    c.cfar.train_per_side = reader.integer("cfar.train_per_side", c.cfar.train_per_side);
    c.cfar.guard_per_side = reader.integer("cfar.guard_per_side", c.cfar.guard_per_side);
    c.cfar.rank = reader.integer("cfar.rank", c.cfar.rank);
    c.cfar.link_distance = reader.integer("cfar.link_distance", c.cfar.link_distance);

    c.clutter.n = reader.integer("clutter.n", c.clutter.n);
    c.clutter.p = reader.num("clutter.p", c.clutter.p);
    c.clutter.amplitude = reader.num("clutter.amplitude", c.clutter.amplitude);
    c.clutter.z = reader.num("clutter.z", c.clutter.z);
    c.clutter.min_range = reader.num("clutter.min_range", c.clutter.min_range);

    c.intrinsics.fu = reader.num("camera.fu", c.intrinsics.fu);
    c.intrinsics.fv = reader.num("camera.fv", c.intrinsics.fv);
    c.intrinsics.pu0 = reader.num("camera.pu0", c.intrinsics.pu0);
    c.intrinsics.pv0 = reader.num("camera.pv0", c.intrinsics.pv0);
    c.intrinsics.image_u = reader.integer("camera.image_u", c.intrinsics.image_u);
    c.intrinsics.image_v = reader.integer("camera.image_v", c.intrinsics.image_v);
    c.camera.pd = reader.num("camera.pd", c.camera.pd);
    c.camera.fp_rate = reader.num("camera.fp_rate", c.camera.fp_rate);
    c.camera.min_box_px = reader.num("camera.min_box_px", c.camera.min_box_px);
    c.camera.max_range = reader.num("camera.max_range", c.camera.max_range);

    c.fusion.sigma_a = reader.num("fusion.sigma_a", c.fusion.sigma_a);
    c.fusion.sigma_alpha = reader.num("fusion.sigma_alpha", c.fusion.sigma_alpha);
    c.fusion.sigma_r = reader.num("fusion.sigma_r", c.fusion.sigma_r);
    c.fusion.sigma_fd = reader.num("fusion.sigma_fd", c.fusion.sigma_fd);
    c.fusion.sigma_pv = reader.num("fusion.sigma_pv", c.fusion.sigma_pv);
    c.fusion.heading_noise = reader.boolean("fusion.heading_noise", c.fusion.heading_noise);
    c.fusion.joseph_form = reader.boolean("fusion.joseph_form", c.fusion.joseph_form);
    c.fusion.paper_doppler = reader.boolean("fusion.paper_doppler", c.fusion.paper_doppler);

    c.gate.position_scale = reader.num("gate.position_scale", c.gate.position_scale);
    c.gate.position_floor = reader.num("gate.position_floor", c.gate.position_floor);
    c.gate.position_override = reader.num("gate.position_override", c.gate.position_override);
    c.gate.pixel_scale = reader.num("gate.pixel_scale", c.gate.pixel_scale);
    c.gate.pixel_floor = reader.num("gate.pixel_floor", c.gate.pixel_floor);
    c.gate.pixel_override = reader.num("gate.pixel_override", c.gate.pixel_override);

    c.image.gate_omega = reader.num("image.gate_omega", c.image.gate_omega);
    c.image.cross_halfspan = reader.num("image.cross_halfspan", c.image.cross_halfspan);
    c.image.range_halfspan = reader.num("image.range_halfspan", c.image.range_halfspan);
    c.image.grid_rows = reader.integer("image.grid_rows", c.image.grid_rows);
    c.image.grid_cols = reader.integer("image.grid_cols", c.image.grid_cols);

    reader.reject_unknown();
    c.validate();
    return c;
}

void save_config(const std::filesystem::path& path, const ScenarioConfig& cfg) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write config: " + path.string());
    f << serialize_config(cfg);
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read config: " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

}  // namespace rcisar

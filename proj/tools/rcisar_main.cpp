#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "rcisar/pipeline.hpp"

namespace fs = std::filesystem;
using namespace rcisar;

namespace {

ScenarioConfig load_base(const std::string& config_path, const std::string& trajectory) {
    if (!config_path.empty()) return load_config(config_path);
    return ScenarioConfig::preset(trajectory_kind_from_string(trajectory));
}

int cmd_run(const std::string& config_path, const std::string& trajectory, uint64_t seed,
            int frames, const std::string& out, bool dump_images) {
    ScenarioConfig cfg = load_base(config_path, trajectory);
    if (seed != 0) cfg.seed = seed;
    if (frames > 0) cfg.frames = frames;
    cfg.dump_images = cfg.dump_images || dump_images;
    const RunResult run = run_scenario(cfg, out.empty() ? fs::path{} : fs::path(out));
    std::cout << report_to_text({run.report});
    const TrackRmse rmse = track_rmse(run);
    std::cout << "track rmse (settled): x " << rmse.x << " m, y " << rmse.y << " m, omega "
              << rmse.omega << " rad/s over " << rmse.samples << " frames\n";
    if (!out.empty()) std::cout << "artifacts written to " << out << '\n';
    return 0;
}

int cmd_isar(const std::string& cube_path, const std::string& track_csv, double r0, double vr,
             double omega, const std::string& out) {
    const RadarCube cube = ingest_cube(cube_path);
    double use_r0 = r0, use_vr = vr, use_omega = omega;
    if (!track_csv.empty()) {
        // find the row with k == cube.cpi_index; columns: k,r0,vr,omega
        std::ifstream f(track_csv);
        if (!f) throw std::runtime_error("cannot read track file: " + track_csv);
        std::string line;
        std::getline(f, line);  // header
        bool found = false;
        while (std::getline(f, line)) {
            std::istringstream ls(line);
            std::string cell;
            std::vector<double> row;
            while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
            if (row.size() >= 4 && static_cast<int>(row[0]) == cube.cpi_index) {
                use_r0 = row[1];
                use_vr = row[2];
                use_omega = row[3];
                found = true;
                break;
            }
        }
        if (!found)
            throw std::runtime_error("track file has no row for cpi " +
                                     std::to_string(cube.cpi_index));
    }

    StretchConfig stretch;
    stretch.r_ref = use_r0;
    stretch.t_ref = cube.config.t_pri;
    fs::create_directories(out);

    const RadarCube plain = stretch_process(cube, stretch);
    const IsarImage rd = form_image(plain, stretch, 0);
    write_image_artifacts(fs::path(out) / "range_doppler", rd);

    const RadarCube comp = compensate_and_stretch(cube, stretch, use_r0, use_vr);
    if (image_gate(use_omega)) {
        const IsarImage img = form_image(comp, stretch, 0, use_omega);
        write_image_artifacts(fs::path(out) / "isar", img);
        if (cube.config.n_channels == 2) {
            const IsarImage img2 = form_image(comp, stretch, 1, use_omega);
            const Interferogram ifg =
                interferogram(img, img2, cube.config.lambda(), cube.config.baseline);
            std::ofstream fe(fs::path(out) / "interferogram.csv");
            fe << "row,col,elevation_rad,valid\n";
            for (int r = 0; r < ifg.rows(); ++r)
                for (int c = 0; c < ifg.cols(); ++c)
                    if (ifg.valid(r, c))
                        fe << r << ',' << c << ',' << ifg.elevation(r, c) << ",1\n";
        }
        std::cout << "wrote range_doppler and isar images to " << out << '\n';
    } else {
        std::cout << "rotation estimate below the imaging gate; wrote range_doppler only\n";
    }
    return 0;
}

int cmd_report(const std::vector<std::string>& run_dirs) {
    // merge the per-run report.csv files into one table
    std::vector<TrajectoryReport> rows;
    for (const auto& dir : run_dirs) {
        std::ifstream f(fs::path(dir) / "report.csv");
        if (!f) throw std::runtime_error("no report.csv under " + dir);
        std::string line;
        std::getline(f, line);
        while (std::getline(f, line)) {
            std::istringstream ls(line);
            std::string cell;
            std::vector<std::string> cells;
            while (std::getline(ls, cell, ',')) cells.push_back(cell);
            if (cells.size() < 10) continue;
            TrajectoryReport r;
            r.name = cells[0];
            r.frames = std::stoi(cells[1]);
            r.gt_images = std::stoi(cells[2]);
            r.fused_images = std::stoi(cells[3]);
            r.ssim_frames = std::stoi(cells[4]);
            r.ssim_defined = cells[5] != "nan";
            r.mean_ssim = r.ssim_defined ? std::stod(cells[5]) : 0.0;
            r.rmse_x = std::stod(cells[6]);
            r.rmse_y = std::stod(cells[7]);
            r.rmse_pos = std::stod(cells[8]);
            r.rmse_omega = std::stod(cells[9]);
            rows.push_back(r);
        }
    }
    std::cout << report_to_text(rows);
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& trajectory, uint64_t seed,
              const std::string& which, int seeds, const std::string& out) {
    ScenarioConfig cfg = load_base(config_path, trajectory);
    if (seed != 0) cfg.seed = seed;
    std::ostringstream os;
    if (which == "camera") {
        ScenarioConfig base = cfg;
        base.radar.pd = 1.0;
        base.radar.pfa = 1e-9;
        base.clutter.n = 0;
        const auto pts = run_camera_sweep(base, {0.5, 0.75, 0.99}, seeds);
        os << sweep_to_text(pts, true);
    } else if (which == "radar") {
        const auto pts =
            run_radar_sweep(cfg, {{0.5, 1e-5}, {0.75, 1e-6}, {0.9, 1e-7}}, seeds);
        os << sweep_to_text(pts, false);
    } else {
        throw std::runtime_error("sweep kind must be 'camera' or 'radar'");
    }
    std::cout << os.str();
    if (!out.empty()) {
        fs::create_directories(fs::path(out).parent_path().empty()
                                   ? fs::path(".")
                                   : fs::path(out).parent_path());
        std::ofstream f(out);
        f << os.str();
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"radar-camera fusion ISAR simulator and processing chain"};
    app.require_subcommand(1);

    std::string config_path, trajectory = "SSUT", out, cube_path, track_csv, sweep_kind = "radar";
    std::vector<std::string> run_dirs;
    uint64_t seed = 0;
    int frames = 0, sweep_seeds = 4;
    double r0 = 25.0, vr = 0.0, omega = 0.0;
    bool dump_images = false;

    auto* run = app.add_subcommand("run", "run a full scenario");
    run->add_option("--config", config_path, "scenario config file");
    run->add_option("--trajectory", trajectory, "canonical trajectory when no config is given")
        ->check(CLI::IsMember({"SSUT", "NNUT", "ENRT", "WSRT"}));
    run->add_option("--seed", seed, "master seed override");
    run->add_option("--frames", frames, "frame count override");
    run->add_option("--out", out, "output directory");
    run->add_flag("--dump-images", dump_images, "write per-frame images");

    auto* isar = app.add_subcommand("isar", "process an ingested radar cube");
    isar->add_option("--cube", cube_path, "cube file")->required();
    isar->add_option("--track", track_csv, "track CSV (k,r0,vr,omega)");
    isar->add_option("--r0", r0, "compensation range when no track file is given");
    isar->add_option("--vr", vr, "compensation radial velocity");
    isar->add_option("--omega", omega, "rotation rate for the crossrange map");
    isar->add_option("--out", out, "output directory")->required();

    auto* report = app.add_subcommand("report", "merge run reports into one table");
    report->add_option("dirs", run_dirs, "run output directories")->required();

    auto* sweep = app.add_subcommand("sweep", "sensor degradation sweeps");
    sweep->add_option("--config", config_path, "scenario config file");
    sweep->add_option("--trajectory", trajectory, "canonical trajectory");
    sweep->add_option("--seed", seed, "master seed override");
    sweep->add_option("--kind", sweep_kind, "camera or radar")
        ->check(CLI::IsMember({"camera", "radar"}));
    sweep->add_option("--seeds", sweep_seeds, "Monte Carlo repetitions per point");
    sweep->add_option("--out", out, "write the table to this file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, trajectory, seed, frames, out, dump_images);
        if (isar->parsed()) return cmd_isar(cube_path, track_csv, r0, vr, omega, out);
        if (report->parsed()) return cmd_report(run_dirs);
        if (sweep->parsed())
            return cmd_sweep(config_path, trajectory, seed, sweep_kind, sweep_seeds, out);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 1;
    }
    return 0;
}

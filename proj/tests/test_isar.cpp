#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rcisar/isar.hpp"
#include "rcisar/rng.hpp"

using namespace rcisar;

namespace {

RadarConfig desk_config() {
    RadarConfig rc;
    rc.noise_power = 0.0;
    return rc;
}

Scatterer point(double range, double vr, double z = 0.1, double amplitude = 1000.0) {
    Scatterer s;
    s.position = {range, 0.0, z};
    s.amplitude = amplitude;
    s.radial_velocity = vr;
    s.visible = true;
    return s;
}

StretchConfig desk_stretch() {
    StretchConfig sc;
    sc.r_ref = 25.0;
    sc.t_ref = 25e-6;
    return sc;
}

struct PeakBin {
    int row = 0, col = 0;
    double power = -1;
};

PeakBin find_peak(const IsarImage& img) {
    PeakBin p;
    for (int r = 0; r < img.rows(); ++r)
        for (int c = 0; c < img.cols(); ++c)
            if (img.power(r, c) > p.power) p = {r, c, img.power(r, c)};
    return p;
}

int nearest_index(const std::vector<double>& axis, double value) {
    int best = 0;
    for (size_t i = 1; i < axis.size(); ++i)
        if (std::abs(axis[i] - value) < std::abs(axis[best] - value)) best = int(i);
    return best;
}

bool is_local_max(const IsarImage& img, int r, int c) {
    const double p = img.power(r, c);
    for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
            if (dr == 0 && dc == 0) continue;
            const int rr = (r + dr + img.rows()) % img.rows();
            const int cc = (c + dc + img.cols()) % img.cols();
            if (img.power(rr, cc) > p) return false;
        }
    return true;
}

IsarImage noise_image(uint64_t seed, int rows = 128, int cols = 512) {
    IsarImage img;
    img.data.resize(rows, cols);
    Rng rng(seed);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) img.data(r, c) = rng.circular_gaussian(1.0);
    img.range_axis.assign(cols, 0.0);
    img.doppler_axis.assign(rows, 0.0);
    for (int c = 0; c < cols; ++c) img.range_axis[c] = c * 0.1;
    for (int r = 0; r < rows; ++r) img.doppler_axis[r] = r * 10.0;
    return img;
}

}  // namespace

TEST_CASE("resolution identities") {
    RadarConfig full;  // measurement-setup numbers
    full.fc = 77e9;
    full.beta = 2e9 / 400e-6;  // 2 GHz over the 400 us chirp
    full.t_pri = 400e-6;
    full.t_cpi = 0.1;
    full.fs = 1.28e6;
    full.n_fast = 512;
    CHECK(full.bandwidth() == doctest::Approx(2e9));
    CHECK(full.range_resolution() == doctest::Approx(0.075).epsilon(1e-6));
    CHECK(full.doppler_resolution() == doctest::Approx(10.0).epsilon(1e-12));

    const double lambda = kSpeedOfLight / 77e9;
    CHECK(std::abs(crossrange_resolution(lambda, 0.1, 0.1) - 0.19) / 0.19 < 0.03);
    CHECK(std::abs(crossrange_resolution(lambda, 0.01, 0.1) - 1.98) / 1.98 < 0.02);
}

TEST_CASE("motion compensation with vr = 0 only rotates the global phase") {
    RadarConfig rc = desk_config();
    rc.pd = 1.0;
    const auto cube = synthesize_cpi(rc, {point(18, 3)}, {}, Vector3d(0, 0, 0.1), 1);
    const auto sc = desk_stretch();
    const auto img0 = form_image(stretch_process(cube, sc), sc, 0);
    const auto imgc = form_image(stretch_process(motion_compensate(cube, 7.0, 0.0), sc), sc, 0);
    for (int r = 0; r < img0.rows(); ++r)
        for (int c = 0; c < img0.cols(); ++c)
            CHECK(std::abs(std::abs(imgc.data(r, c)) - std::abs(img0.data(r, c))) <=
                  1e-9 * std::abs(img0.data(r, c)) + 1e-9);
}

TEST_CASE("a scatterer moving exactly at (r0, vr) compensates to Doppler zero") {
    RadarConfig rc = desk_config();
    rc.pd = 1.0;
    const auto cube = synthesize_cpi(rc, {point(18.0, 4.4)}, {}, Vector3d(0, 0, 0.1), 1);
    const auto sc = desk_stretch();
    const auto img = form_image(compensate_and_stretch(cube, sc, 18.0, 4.4), sc, 0);
    CHECK(find_peak(img).row == img.rows() / 2);
}

TEST_CASE("residual rotational Doppler 2 omega rho / lambda survives compensation") {
    RadarConfig rc = desk_config();
    rc.pd = 1.0;
    const double r0 = 20.0, vr = 2.0, omega = 0.3, rho = 1.0;
    // scatterer at crossrange rho of a target turning at omega
    const auto cube =
        synthesize_cpi(rc, {point(r0, vr + omega * rho)}, {}, Vector3d(0, 0, 0.1), 1);
    const auto sc = desk_stretch();
    const auto img = form_image(compensate_and_stretch(cube, sc, r0, vr), sc, 0);
    const double expected = 2.0 * omega * rho / rc.lambda();
    CHECK(expected == doctest::Approx(154.0).epsilon(2e-3));
    CHECK(find_peak(img).row == nearest_index(img.doppler_axis, expected));
}

TEST_CASE("stretch processing centers the reference range at zero beat") {
    RadarConfig rc = desk_config();
    rc.pd = 1.0;
    const auto sc = desk_stretch();

    SUBCASE("scatterer at R_ref lands in the DC fast-time bin") {
        const auto cube = synthesize_cpi(rc, {point(25.0, 0.0)}, {}, Vector3d(0, 0, 0.1), 1);
        const auto img = form_image(stretch_process(cube, sc), sc, 0);
        CHECK(find_peak(img).col == img.cols() / 2);
    }
    SUBCASE("scatterer 1.5 m beyond R_ref lands at beat 600 kHz") {
        const auto cube = synthesize_cpi(rc, {point(26.5, 0.0)}, {}, Vector3d(0, 0, 0.1), 1);
        const auto img = form_image(stretch_process(cube, sc), sc, 0);
        const auto peak = find_peak(img);
        const double beat = 2.0 * rc.beta * 1.5 / kSpeedOfLight;
        CHECK(beat == doctest::Approx(600e3).epsilon(1e-9));
        // beat bin maps back to the range axis
        CHECK(peak.col == nearest_index(img.range_axis, 26.5));
    }
    SUBCASE("reference shorter than the PRI is rejected") {
        StretchConfig bad = sc;
        bad.t_ref = 10e-6;
        CHECK_THROWS_AS(bad.validate(rc), ConfigError);
    }
}

TEST_CASE("Parseval: image power equals cube power times the DFT size") {
    RadarConfig rc = desk_config();
    rc.pd = 1.0;
    rc.noise_power = 0.7;
    const auto cube = synthesize_cpi(rc, {point(14, 2), point(30, -4)}, {}, Vector3d(0, 0, 0.1), 9);
    const auto sc = desk_stretch();
    const auto stretched = stretch_process(cube, sc);
    const auto img = form_image(stretched, sc, 0);
    const double cube_power = stretched.channels[0].squaredNorm();
    const double img_power = img.total_power();
    const double n_total = double(img.rows()) * img.cols();
    CHECK(std::abs(img_power - n_total * cube_power) <= 1e-9 * img_power);
}

TEST_CASE("image gate") {
    CHECK_FALSE(image_gate(0.005));
    CHECK_FALSE(image_gate(0.0));
    CHECK(image_gate(0.01));
    CHECK(image_gate(-0.02));
    // crossrange mapping request below the gate is an error
    RadarConfig rc = desk_config();
    rc.pd = 1.0;
    const auto cube = synthesize_cpi(rc, {point(20, 0)}, {}, Vector3d(0, 0, 0.1), 1);
    const auto sc = desk_stretch();
    const auto stretched = stretch_process(cube, sc);
    CHECK_THROWS_AS(form_image(stretched, sc, 0, 0.001), GatingError);
    CHECK_NOTHROW(form_image(stretched, sc, 0, 0.3));
}

TEST_CASE("crossrange axis maps Doppler through lambda over two omega") {
    RadarConfig rc = desk_config();
    rc.pd = 1.0;
    const double omega = 0.3;
    const auto cube = synthesize_cpi(rc, {point(20, 0)}, {}, Vector3d(0, 0, 0.1), 1);
    const auto sc = desk_stretch();
    const auto img = form_image(stretch_process(cube, sc), sc, 0, omega);
    REQUIRE(img.has_crossrange);
    for (int r = 0; r < img.rows(); r += 17) {
        CHECK(img.crossrange_axis[r] ==
              doctest::Approx(-rc.lambda() * img.doppler_axis[r] / (2 * omega)).epsilon(1e-12));
    }
}

TEST_CASE("noise-free multi-scatterer scenes peak at the predicted bins") {
    RadarConfig rc = desk_config();
    rc.pd = 1.0;
    rc.range_spreading = false;
    const auto sc = desk_stretch();
    Rng rng(2024);
    for (int scene = 0; scene < 10; ++scene) {
        std::vector<Scatterer> scats;
        std::vector<std::pair<int, int>> bins;
        const int n = 2 + int(rng.uniform() * 3.99);
        int guard = 0;
        while (int(scats.size()) < n && guard++ < 200) {
            const double r = rng.uniform(8, 42);
            const double v = rng.uniform(-9, 9);
            // enforce distinct bins
            const int prow = int(std::llround(2 * v / rc.lambda() * rc.t_cpi));
            const int pcol = int(std::llround((r - sc.r_ref) * 2 * rc.beta / kSpeedOfLight *
                                              rc.n_fast / rc.fs));
            bool clash = false;
            for (auto& b : bins)
                clash |= std::abs(b.first - prow) < 6 && std::abs(b.second - pcol) < 6;
            if (clash) continue;
            bins.emplace_back(prow, pcol);
            scats.push_back(point(r, v, rng.uniform(0, 2)));
        }
        const auto cube = synthesize_cpi(rc, scats, {}, Vector3d(0, 0, 0.1), 50 + scene);
        const auto img = form_image(stretch_process(cube, sc), sc, 0);
        for (const auto& s : scats) {
            const double fd = 2 * s.radial_velocity / rc.lambda();
            const double range = s.position.norm();
            const int row = nearest_index(img.doppler_axis, fd);
            const int col = nearest_index(img.range_axis,
                                          std::hypot(range, 0.0));
            CAPTURE(scene);
            CHECK(is_local_max(img, row, col));
        }
    }
}

TEST_CASE("interferogram recovers elevation") {
    RadarConfig rc = desk_config();
    rc.pd = 1.0;
    const Vector3d radar(0, 0, 0.1);
    const auto sc = desk_stretch();

    SUBCASE("identical channels give zero elevation on the valid mask") {
        const auto cube = synthesize_cpi(rc, {point(20, 0, 0.1)}, {}, radar, 1);
        const auto img = form_image(stretch_process(cube, sc), sc, 0);
        const auto ifg = interferogram(img, img, rc.lambda(), rc.baseline);
        int valid = 0;
        for (int r = 0; r < ifg.rows(); ++r)
            for (int c = 0; c < ifg.cols(); ++c)
                if (ifg.valid(r, c)) {
                    CHECK(ifg.elevation(r, c) == 0.0);
                    ++valid;
                }
        CHECK(valid > 0);
    }

    SUBCASE("synthetic 2 degree scatterer is recovered within 0.1 degree") {
        const double theta = 2.0 * kPi / 180.0;
        const double range = 24.0;
        Scatterer s = point(range * std::cos(theta), 0.0, 0.1 + range * std::sin(theta));
        const auto cube = synthesize_cpi(rc, {s}, {}, radar, 1);
        const auto i1 = form_image(stretch_process(cube, sc), sc, 0);
        const auto i2 = form_image(stretch_process(cube, sc), sc, 1);
        const auto ifg = interferogram(i1, i2, rc.lambda(), rc.baseline);
        const auto peak = find_peak(i1);
        REQUIRE(ifg.valid(peak.row, peak.col));
        CHECK(std::abs(ifg.elevation(peak.row, peak.col) - theta) < 0.1 * kPi / 180.0);

        // height from elevation times range
        const double height = ifg.elevation(peak.row, peak.col) * range;
        CHECK(std::abs(height - range * std::sin(theta)) < 0.05);

        // swapping channels negates the interferogram on the valid mask
        const auto swapped = interferogram(i2, i1, rc.lambda(), rc.baseline);
        CHECK(swapped.elevation(peak.row, peak.col) ==
              doctest::Approx(-ifg.elevation(peak.row, peak.col)).epsilon(1e-9));
    }

    SUBCASE("dimension mismatch is rejected") {
        const auto cube = synthesize_cpi(rc, {point(20, 0)}, {}, radar, 1);
        const auto img = form_image(stretch_process(cube, sc), sc, 0);
        IsarImage small = img;
        small.data = img.data.topLeftCorner(64, 64);
        CHECK_THROWS(interferogram(img, small, rc.lambda(), rc.baseline));
    }

    SUBCASE("arguments beyond asin are masked and tallied") {
        // constant phase offset of 3 rad with a 0.4 lambda baseline drives
        // lambda dphi / (2 pi d) = 1.19 past the asin domain
        const auto cube = synthesize_cpi(rc, {point(20, 0, 0.1)}, {}, radar, 1);
        const auto i1 = form_image(stretch_process(cube, sc), sc, 0);
        IsarImage i2 = i1;
        i2.data *= std::polar(1.0, 3.0);
        const auto ifg = interferogram(i1, i2, rc.lambda(), 0.4 * rc.lambda());
        CHECK(ifg.clipped_bins > 0);
    }
}

TEST_CASE("OS-CFAR detector") {
    SUBCASE("all-zero image produces no detections") {
        IsarImage img;
        img.data = Eigen::MatrixXcd::Zero(64, 64);
        img.range_axis.assign(64, 0.0);
        img.doppler_axis.assign(64, 0.0);
        CHECK(os_cfar_detect(img, 1e-3, 4, 2).empty());
    }

    SUBCASE("window must fit the image") {
        IsarImage img;
        img.data = Eigen::MatrixXcd::Zero(12, 12);
        img.range_axis.assign(12, 0.0);
        img.doppler_axis.assign(12, 0.0);
        CHECK_THROWS_AS(os_cfar_detect(img, 1e-3, 8, 2), ConfigError);
    }

    SUBCASE("false-alarm count matches the configured pfa on pure noise") {
        // >= 1e6 cells via 16 independent noise images at the spec default
        // window (8 train + 2 guard per side)
        long total_cells = 0, detections = 0;
        for (int i = 0; i < 16; ++i) {
            const auto img = noise_image(500 + i);
            detections += static_cast<long>(os_cfar_detect(img, 1e-3, 8, 2).size());
            total_cells += img.rows() * img.cols();
        }
        CHECK(total_cells >= 1000000);
        const double expected = 1e-3 * double(total_cells);
        CHECK(std::abs(detections - expected) <= 150.0 * total_cells / 1.0e6);
    }

    SUBCASE("a strong injected point is detected at the global maximum") {
        auto img = noise_image(321);
        img.data(40, 200) = std::sqrt(100.0);  // 20 dB above the unit noise floor
        const auto dets = os_cfar_detect(img, 1e-4, 8, 2);
        bool found = false;
        for (const auto& d : dets)
            found |= std::abs(d.row - 40) <= 1 && std::abs(d.col - 200) <= 1;
        CHECK(found);
    }

    SUBCASE("alpha solves the order-statistic false-alarm equation") {
        const double alpha = os_cfar_alpha(1e-3, 144, 108);
        double log_pfa = 0;
        for (int i = 0; i < 108; ++i)
            log_pfa += std::log(144.0 - i) - std::log(144.0 - i + alpha);
        CHECK(std::exp(log_pfa) == doctest::Approx(1e-3).epsilon(1e-6));
        CHECK_THROWS(os_cfar_alpha(0.0, 144, 108));
        CHECK_THROWS(os_cfar_alpha(1e-3, 144, 200));
    }
}

TEST_CASE("clustering to measurements") {
    IsarImage img;
    img.data = Eigen::MatrixXcd::Zero(64, 128);
    img.range_axis.resize(128);
    img.doppler_axis.resize(64);
    for (int c = 0; c < 128; ++c) img.range_axis[c] = 10.0 + 0.1 * c;
    for (int r = 0; r < 64; ++r) img.doppler_axis[r] = (r - 32) * 10.0;
    img.cpi_index = 7;

    SUBCASE("empty detections yield no measurement") {
        CHECK_FALSE(cluster_to_measurement({}, img).has_value());
        CHECK(clusters_to_measurements({}, img).empty());
    }

    SUBCASE("one tight cluster reduces to its power-weighted centroid") {
        std::vector<Detection> dets = {
            {30, 50, 1.0}, {30, 51, 2.0}, {31, 50, 3.0}, {31, 51, 2.0}, {32, 50, 2.0}};
        const auto m = cluster_to_measurement(dets, img);
        REQUIRE(m.has_value());
        CHECK(m->cluster_size == 5);
        CHECK(m->cpi_index == 7);
        double wsum = 0, rsum = 0, dsum = 0;
        for (const auto& d : dets) {
            wsum += d.power;
            rsum += d.power * img.range_axis[d.col];
            dsum += d.power * img.doppler_axis[d.row];
        }
        CHECK(m->range_m == doctest::Approx(rsum / wsum).epsilon(1e-12));
        CHECK(m->doppler_hz == doctest::Approx(dsum / wsum).epsilon(1e-12));
    }

    SUBCASE("the larger of two separated clusters wins") {
        std::vector<Detection> dets;
        for (int i = 0; i < 12; ++i) dets.push_back({10 + i / 4, 20 + i % 4, 1.0});
        for (int i = 0; i < 3; ++i) dets.push_back({50, 100 + i, 10.0});
        const auto m = cluster_to_measurement(dets, img, nullptr, 3);
        REQUIRE(m.has_value());
        CHECK(m->cluster_size == 12);
        CHECK(m->range_m < 13.0);

        const auto all = clusters_to_measurements(dets, img, nullptr, 3);
        REQUIRE(all.size() == 2);
        CHECK(all[0].cluster_size == 12);
        CHECK(all[1].cluster_size == 3);
    }

    SUBCASE("elevation averages only over valid interferogram bins") {
        Interferogram ifg;
        ifg.elevation = Eigen::MatrixXd::Zero(64, 128);
        ifg.valid = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(64, 128, false);
        ifg.elevation(30, 50) = 0.02;
        ifg.valid(30, 50) = true;
        ifg.elevation(30, 51) = 0.04;
        ifg.valid(30, 51) = true;
        std::vector<Detection> dets = {{30, 50, 1.0}, {30, 51, 3.0}, {31, 50, 5.0}};
        const auto m = cluster_to_measurement(dets, img, &ifg);
        REQUIRE(m.has_value());
        REQUIRE(m->elevation_rad.has_value());
        CHECK(*m->elevation_rad == doctest::Approx((0.02 + 3 * 0.04) / 4.0).epsilon(1e-12));
    }
}

TEST_CASE("hann window option keeps the peak location") {
    RadarConfig rc = desk_config();
    rc.pd = 1.0;
    const auto cube = synthesize_cpi(rc, {point(18.0, 4.0)}, {}, Vector3d(0, 0, 0.1), 1);
    StretchConfig sc = desk_stretch();
    const auto plain = form_image(stretch_process(cube, sc), sc, 0);
    sc.hann_window = true;
    const auto windowed = form_image(stretch_process(cube, sc), sc, 0);
    const auto p0 = find_peak(plain);
    const auto p1 = find_peak(windowed);
    CHECK(std::abs(p0.row - p1.row) <= 1);
    CHECK(std::abs(p0.col - p1.col) <= 1);
}

#include "rcisar/isar.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <thread>

#include "rcisar/fft.hpp"

namespace rcisar {

void StretchConfig::validate(const RadarConfig& rc) const {
    if (t_ref < rc.t_pri - 1e-12)
        throw ConfigError("stretch reference duration must be >= T_PRI");
    if (nfft_fast != 0 && nfft_fast < rc.n_fast)
        throw ConfigError("fast-time DFT size smaller than data");
    if (nfft_slow != 0 && nfft_slow < rc.n_pulses())
        throw ConfigError("slow-time DFT size smaller than data");
}

RadarCube motion_compensate(const RadarCube& cube, double r0, double vr) {
    if (!std::isfinite(r0) || !std::isfinite(vr))
        throw std::invalid_argument("motion compensation parameters must be finite");
    RadarCube out = cube;
    const double lambda = cube.config.lambda();
    for (auto& ch : out.channels) {
        for (int p = 0; p < ch.rows(); ++p) {
            const double t = p * cube.config.t_pri;
            const cd phase = std::polar(1.0, 2.0 * kPi * 2.0 * (r0 + vr * t) / lambda);
            ch.row(p) *= phase;
        }
    }
    return out;
}

RadarCube stretch_process(const RadarCube& cube, const StretchConfig& cfg) {
    cfg.validate(cube.config);
    RadarCube out = cube;
    const double tau_ref = 2.0 * cfg.r_ref / kSpeedOfLight;
    const int n_fast = cube.config.n_fast;
    Eigen::RowVectorXcd ref_conj(n_fast);
    for (int n = 0; n < n_fast; ++n) {
        const double u = n / cube.config.fs - tau_ref;
        ref_conj(n) = std::polar(1.0, -kPi * cube.config.beta * u * u);
    }
    for (auto& ch : out.channels)
        for (int p = 0; p < ch.rows(); ++p) ch.row(p).array() *= ref_conj.array();
    return out;
}

RadarCube compensate_and_stretch(const RadarCube& cube, const StretchConfig& cfg, double r0,
                                 double vr) {
    cfg.validate(cube.config);
    if (!std::isfinite(r0) || !std::isfinite(vr))
        throw std::invalid_argument("motion compensation parameters must be finite");
    RadarCube out = cube;
    const double lambda = cube.config.lambda();
    const double tau_ref = 2.0 * cfg.r_ref / kSpeedOfLight;
    const int n_fast = cube.config.n_fast;
    Eigen::RowVectorXcd ref_conj(n_fast);
    for (int n = 0; n < n_fast; ++n) {
        const double u = n / cube.config.fs - tau_ref;
        ref_conj(n) = std::polar(1.0, -kPi * cube.config.beta * u * u);
    }
    for (auto& ch : out.channels) {
        for (int p = 0; p < ch.rows(); ++p) {
            const double t = p * cube.config.t_pri;
            const cd phase = std::polar(1.0, 2.0 * kPi * 2.0 * (r0 + vr * t) / lambda);
            ch.row(p) = (ch.row(p) * phase).array() * ref_conj.array();
        }
    }
    return out;
}

bool image_gate(double omega_estimate, double threshold) {
    return std::abs(omega_estimate) >= threshold;
}

IsarImage form_image(const RadarCube& stretched, const StretchConfig& cfg, int channel,
                     std::optional<double> omega, double gate_threshold) {
    if (channel < 0 || channel >= static_cast<int>(stretched.channels.size()))
        throw std::invalid_argument("form_image: channel out of range");
    if (omega && !image_gate(*omega, gate_threshold))
        throw GatingError("rotation estimate below the imaging gate");

    const auto& rc = stretched.config;
    const CubeMatrix* data = &stretched.channels[channel];
    CubeMatrix windowed;
    if (cfg.hann_window) {
        windowed = *data;
        const int np = static_cast<int>(windowed.rows()), nf = static_cast<int>(windowed.cols());
        for (int p = 0; p < np; ++p) {
            const double wp = 0.5 - 0.5 * std::cos(2.0 * kPi * p / (np - 1));
            for (int n = 0; n < nf; ++n) {
                const double wn = 0.5 - 0.5 * std::cos(2.0 * kPi * n / (nf - 1));
                windowed(p, n) *= wp * wn;
            }
        }
        data = &windowed;
    }

    const int nr = cfg.nfft_slow > 0 ? cfg.nfft_slow : static_cast<int>(data->rows());
    const int nc = cfg.nfft_fast > 0 ? cfg.nfft_fast : static_cast<int>(data->cols());

    IsarImage img;
    img.data = dft2_backward(*data, nr, nc);
    fftshift_inplace(img.data);
    img.cpi_index = stretched.cpi_index;
    img.channel = channel;

    img.doppler_axis = fftshifted_axis(nr, rc.prf());
    const auto beat = fftshifted_axis(nc, rc.fs);
    img.range_axis.resize(nc);
    for (int c = 0; c < nc; ++c)
        img.range_axis[c] = cfg.r_ref + kSpeedOfLight * beat[c] / (2.0 * rc.beta);
    if (omega) {
        img.omega = *omega;
        img.has_crossrange = true;
        img.crossrange_axis.resize(nr);
        for (int r = 0; r < nr; ++r)
            img.crossrange_axis[r] = -rc.lambda() * img.doppler_axis[r] / (2.0 * *omega);
    }
    return img;
}

Interferogram interferogram(const IsarImage& ch1, const IsarImage& ch2, double wavelength,
                            double baseline, double gate_db) {
    if (ch1.rows() != ch2.rows() || ch1.cols() != ch2.cols())
        throw std::invalid_argument("interferogram: image dimensions differ");
    if (baseline <= 0) throw std::invalid_argument("interferogram: baseline must be positive");

    const int rows = ch1.rows(), cols = ch1.cols();

    // magnitude gate: 10 dB (default) above the noise floor, estimated from
    // the median cell power (median of an exponential = mean * ln 2)
    std::vector<double> powers(static_cast<size_t>(rows) * cols);
    size_t idx = 0;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) powers[idx++] = ch1.power(r, c);
    std::nth_element(powers.begin(), powers.begin() + powers.size() / 2, powers.end());
    const double noise_mean = powers[powers.size() / 2] / std::log(2.0);
    const double gate = noise_mean * from_db10(gate_db);

    Interferogram out;
    out.elevation = Eigen::MatrixXd::Zero(rows, cols);
    out.valid = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(rows, cols, false);

    const double scale = wavelength / (2.0 * kPi * baseline);
    for (int r = 0; r < rows; ++r) {
        bool have_prev = false;
        double prev_phase = 0.0;
        for (int c = 0; c < cols; ++c) {
            if (ch1.power(r, c) < gate || ch2.power(r, c) < gate) {
                have_prev = false;
                continue;
            }
            const double raw = wrap_pi(std::arg(ch2.data(r, c)) - std::arg(ch1.data(r, c)));
            // 1D unwrap along range across contiguous valid spans
            double phase = raw;
            if (have_prev) phase = prev_phase + wrap_pi(raw - prev_phase);
            prev_phase = phase;
            have_prev = true;
            const double arg = scale * phase;
            if (std::abs(arg) > 1.0) {
                ++out.clipped_bins;
                continue;
            }
            out.elevation(r, c) = std::asin(arg);
            out.valid(r, c) = true;
        }
    }
    return out;
}

double os_cfar_alpha(double pfa, int n_train, int rank) {
    if (pfa <= 0 || pfa >= 1) throw std::invalid_argument("pfa must be in (0,1)");
    if (rank < 1 || rank > n_train) throw std::invalid_argument("rank outside [1, N]");
    auto log_pfa = [&](double alpha) {
        double acc = 0.0;
        for (int i = 0; i < rank; ++i)
            acc += std::log(double(n_train - i)) - std::log(double(n_train - i) + alpha);
        return acc;
    };
    const double target = std::log(pfa);
    double lo = 1e-9, hi = 1.0;
    while (log_pfa(hi) > target) hi *= 2.0;  // log_pfa decreases with alpha
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (log_pfa(mid) > target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

namespace {

// exact k-th smallest (1-based) of v via a bounded heap over the smaller tail
double rank_statistic(const std::vector<double>& v, int k, std::vector<double>& heap) {
    const int n = static_cast<int>(v.size());
    const int m = n - k + 1;  // k-th smallest == m-th largest
    if (m <= k) {
        heap.assign(v.begin(), v.begin() + m);
        std::make_heap(heap.begin(), heap.end(), std::greater<>());
        for (int i = m; i < n; ++i) {
            if (v[i] > heap.front()) {
                std::pop_heap(heap.begin(), heap.end(), std::greater<>());
                heap.back() = v[i];
                std::push_heap(heap.begin(), heap.end(), std::greater<>());
            }
        }
    } else {
        heap.assign(v.begin(), v.begin() + k);
        std::make_heap(heap.begin(), heap.end());
        for (int i = k; i < n; ++i) {
            if (v[i] < heap.front()) {
                std::pop_heap(heap.begin(), heap.end());
                heap.back() = v[i];
                std::push_heap(heap.begin(), heap.end());
            }
        }
    }
    return heap.front();
}

}  // namespace

std::vector<Detection> os_cfar_detect(const IsarImage& img, double pfa, int train_per_side,
                                      int guard_per_side, int rank) {
    const int rows = img.rows(), cols = img.cols();
    const int w = train_per_side + guard_per_side;
    if (2 * w + 1 > rows || 2 * w + 1 > cols)
        throw ConfigError("OS-CFAR window does not fit the image");
    const int n_train = (2 * w + 1) * (2 * w + 1) -
                        (2 * guard_per_side + 1) * (2 * guard_per_side + 1);
    if (rank <= 0) rank = static_cast<int>(std::floor(0.75 * n_train));
    const double alpha = os_cfar_alpha(pfa, n_train, rank);

    // pad the power map with cyclic margins so the window gather needs no
    // modulo arithmetic; row-major keeps the inner gather contiguous
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> padded(
        rows + 2 * w, cols + 2 * w);
    for (int r = 0; r < rows + 2 * w; ++r) {
        const int rr = (r - w + rows) % rows;
        for (int c = 0; c < cols + 2 * w; ++c)
            padded(r, c) = img.power(rr, (c - w + cols) % cols);
    }

    // flat training-ring offsets into the padded map
    const long stride = padded.cols();
    std::vector<long> offsets;
    offsets.reserve(n_train);
    for (int dr = -w; dr <= w; ++dr)
        for (int dc = -w; dc <= w; ++dc)
            if (std::abs(dr) > guard_per_side || std::abs(dc) > guard_per_side)
                offsets.push_back(dr * stride + dc);

    const double* base = padded.data();
    auto scan_rows = [&](int r0, int r1) {
        std::vector<Detection> found;
        std::vector<double> train(n_train), heap;
        for (int r = r0; r < r1; ++r) {
            for (int c = 0; c < cols; ++c) {
                const long center = (r + w) * stride + (c + w);
                for (int i = 0; i < n_train; ++i) train[i] = base[center + offsets[i]];
                const double stat = rank_statistic(train, rank, heap);
                const double cell = base[center];
                if (cell > alpha * stat) found.push_back({r, c, cell});
            }
        }
        return found;
    };

    // row blocks scanned in parallel; concatenation order is fixed, so the
    // result is independent of the thread count
    const int n_blocks = std::clamp(static_cast<int>(std::thread::hardware_concurrency()), 1, 8);
    std::vector<std::future<std::vector<Detection>>> futures;
    for (int b = 0; b < n_blocks; ++b) {
        const int r0 = rows * b / n_blocks, r1 = rows * (b + 1) / n_blocks;
        futures.push_back(std::async(std::launch::async, scan_rows, r0, r1));
    }
    std::vector<Detection> detections;
    for (auto& f : futures) {
        auto part = f.get();
        detections.insert(detections.end(), part.begin(), part.end());
    }
    return detections;
}

namespace {

// single-linkage component labels under Chebyshev bin distance
std::vector<int> link_clusters(const std::vector<Detection>& detections, int link_distance,
                               int* n_labels_out) {
    const int n = static_cast<int>(detections.size());
    std::vector<int> label(n, -1);
    int n_labels = 0;
    for (int i = 0; i < n; ++i) {
        if (label[i] >= 0) continue;
        label[i] = n_labels;
        std::vector<int> stack{i};
        while (!stack.empty()) {
            const int a = stack.back();
            stack.pop_back();
            for (int b = 0; b < n; ++b) {
                if (label[b] >= 0) continue;
                const int dr = std::abs(detections[a].row - detections[b].row);
                const int dc = std::abs(detections[a].col - detections[b].col);
                if (std::max(dr, dc) <= link_distance) {
                    label[b] = n_labels;
                    stack.push_back(b);
                }
            }
        }
        ++n_labels;
    }
    *n_labels_out = n_labels;
    return label;
}

RadarMeasurement centroid_of(const std::vector<Detection>& detections,
                             const std::vector<int>& label, int which, const IsarImage& img,
                             const Interferogram* interf) {
    RadarMeasurement m;
    m.cpi_index = img.cpi_index;
    double wsum = 0, rsum = 0, dsum = 0, esum = 0, ewsum = 0;
    int nsel = 0;
    for (size_t i = 0; i < detections.size(); ++i) {
        if (label[i] != which) continue;
        const auto& d = detections[i];
        wsum += d.power;
        rsum += d.power * img.range_axis[d.col];
        dsum += d.power * img.doppler_axis[d.row];
        ++nsel;
        if (interf && interf->valid(d.row, d.col)) {
            esum += d.power * interf->elevation(d.row, d.col);
            ewsum += d.power;
        }
    }
    m.cluster_size = nsel;
    m.range_m = rsum / wsum;
    m.doppler_hz = dsum / wsum;
    if (ewsum > 0) m.elevation_rad = esum / ewsum;
    return m;
}

}  // namespace

std::optional<RadarMeasurement> cluster_to_measurement(const std::vector<Detection>& detections,
                                                       const IsarImage& img,
                                                       const Interferogram* interf,
                                                       int link_distance) {
    if (detections.empty()) return std::nullopt;
    int n_labels = 0;
    const auto label = link_clusters(detections, link_distance, &n_labels);

    std::vector<int> count(n_labels, 0);
    std::vector<double> cluster_power(n_labels, 0.0);
    for (size_t i = 0; i < detections.size(); ++i) {
        ++count[label[i]];
        cluster_power[label[i]] += detections[i].power;
    }
    int best = 0;
    for (int l = 1; l < n_labels; ++l) {
        if (count[l] > count[best] ||
            (count[l] == count[best] && cluster_power[l] > cluster_power[best]))
            best = l;
    }
    return centroid_of(detections, label, best, img, interf);
}

std::vector<RadarMeasurement> clusters_to_measurements(const std::vector<Detection>& detections,
                                                       const IsarImage& img,
                                                       const Interferogram* interf,
                                                       int link_distance, int max_clusters) {
    std::vector<RadarMeasurement> out;
    if (detections.empty()) return out;
    int n_labels = 0;
    const auto label = link_clusters(detections, link_distance, &n_labels);
    for (int l = 0; l < n_labels; ++l) out.push_back(centroid_of(detections, label, l, img, interf));
    std::sort(out.begin(), out.end(), [](const RadarMeasurement& a, const RadarMeasurement& b) {
        return a.cluster_size > b.cluster_size;
    });
    if (static_cast<int>(out.size()) > max_clusters) out.resize(max_clusters);
    return out;
}

}  // namespace rcisar

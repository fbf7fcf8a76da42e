#include "rcisar/metrics.hpp"

#include <cmath>
#include <sstream>

namespace rcisar {

void SsimConfig::validate() const {
    if (window < 3) throw ConfigError("SSIM window must be >= 3");
    if (k1 <= 0 || k2 <= 0 || dynamic_range <= 0)
        throw ConfigError("SSIM constants must be positive");
}

double ssim(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const SsimConfig& cfg) {
    cfg.validate();
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("ssim: image dimensions differ");
    const int rows = static_cast<int>(a.rows()), cols = static_cast<int>(a.cols());
    const int w = cfg.window;
    if (rows < w || cols < w) throw std::invalid_argument("ssim: image smaller than the window");

    const double c1 = (cfg.k1 * cfg.dynamic_range) * (cfg.k1 * cfg.dynamic_range);
    const double c2 = (cfg.k2 * cfg.dynamic_range) * (cfg.k2 * cfg.dynamic_range);
    const double n = double(w) * w;

    double acc = 0.0;
    long count = 0;
    for (int r = 0; r + w <= rows; ++r) {
        for (int c = 0; c + w <= cols; ++c) {
            const auto wa = a.block(r, c, w, w);
            const auto wb = b.block(r, c, w, w);
            const double ma = wa.sum() / n;
            const double mb = wb.sum() / n;
            const double va = (wa.array() - ma).square().sum() / (n - 1);
            const double vb = (wb.array() - mb).square().sum() / (n - 1);
            const double cov = ((wa.array() - ma) * (wb.array() - mb)).sum() / (n - 1);
            const double s = ((2 * ma * mb + c1) * (2 * cov + c2)) /
                             ((ma * ma + mb * mb + c1) * (va + vb + c2));
            acc += s;
            ++count;
        }
    }
    return acc / double(count);
}

Eigen::MatrixXd to_db_power(const Eigen::MatrixXd& power, double floor_db) {
    const int rows = static_cast<int>(power.rows()), cols = static_cast<int>(power.cols());
    const double peak = power.maxCoeff();
    Eigen::MatrixXd out(rows, cols);
    if (!(peak > 0)) {
        out.setZero();
        return out;
    }
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const double p = power(r, c);
            const double db = p > 0 ? 10.0 * std::log10(p / peak) : -floor_db;
            out(r, c) = std::max(db, -floor_db) + floor_db;
        }
    }
    return out;
}

Eigen::MatrixXd to_db_magnitude(const Eigen::MatrixXcd& img, double floor_db) {
    return to_db_power(img.cwiseAbs2(), floor_db);
}

double image_entropy_power(const Eigen::MatrixXd& power) {
    if (power.size() == 0) throw std::invalid_argument("entropy of an empty image");
    const double total = power.sum();
    if (!(total > 0)) throw std::invalid_argument("entropy of an all-zero image");
    double h = 0.0;
    for (int r = 0; r < power.rows(); ++r) {
        for (int c = 0; c < power.cols(); ++c) {
            const double p = power(r, c) / total;
            if (p > 0) h -= p * std::log(p);
        }
    }
    return h;
}

double image_entropy(const Eigen::MatrixXcd& img) {
    return image_entropy_power(img.cwiseAbs2());
}

namespace {

// fractional index of value on a uniform axis (either direction); returns
// false outside the axis span
bool axis_index(const std::vector<double>& axis, double value, double* idx) {
    if (axis.size() < 2) return false;
    const double step = axis[1] - axis[0];
    const double f = (value - axis[0]) / step;
    if (f < 0 || f > double(axis.size() - 1)) return false;
    *idx = f;
    return true;
}

}  // namespace

Eigen::MatrixXd regrid_metric(const IsarImage& img, double range_center, double range_halfspan,
                              double cross_halfspan, int out_rows, int out_cols) {
    if (!img.has_crossrange)
        throw std::invalid_argument("regrid_metric needs a crossrange-mapped image");
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(out_rows, out_cols);
    for (int r = 0; r < out_rows; ++r) {
        const double cross =
            -cross_halfspan + (2.0 * cross_halfspan) * (r + 0.5) / out_rows;
        for (int c = 0; c < out_cols; ++c) {
            const double range =
                range_center - range_halfspan + (2.0 * range_halfspan) * (c + 0.5) / out_cols;
            double fi, fj;
            if (!axis_index(img.crossrange_axis, cross, &fi)) continue;
            if (!axis_index(img.range_axis, range, &fj)) continue;
            const int i0 = std::min(static_cast<int>(fi), img.rows() - 2);
            const int j0 = std::min(static_cast<int>(fj), img.cols() - 2);
            const double di = fi - i0, dj = fj - j0;
            const double p00 = img.power(i0, j0), p01 = img.power(i0, j0 + 1);
            const double p10 = img.power(i0 + 1, j0), p11 = img.power(i0 + 1, j0 + 1);
            out(r, c) = (1 - di) * ((1 - dj) * p00 + dj * p01) +
                        di * ((1 - dj) * p10 + dj * p11);
        }
    }
    return out;
}

TrajectoryReport tabulate_run(const std::string& name,
                              const std::vector<FrameImageDecision>& decisions,
                              const std::vector<TrackErrorSample>& errors) {
    TrajectoryReport rep;
    rep.name = name;
    rep.frames = static_cast<int>(decisions.size());
    double ssim_acc = 0.0;
    for (const auto& d : decisions) {
        rep.gt_images += d.gt_image ? 1 : 0;
        rep.fused_images += d.fused_image ? 1 : 0;
        if (d.ssim) {
            ssim_acc += *d.ssim;
            ++rep.ssim_frames;
        }
    }
    rep.ssim_defined = rep.ssim_frames > 0;
    rep.mean_ssim = rep.ssim_defined ? ssim_acc / rep.ssim_frames : 0.0;

    if (!errors.empty()) {
        double sx = 0, sy = 0, so = 0;
        for (const auto& e : errors) {
            sx += e.ex * e.ex;
            sy += e.ey * e.ey;
            so += e.eomega * e.eomega;
        }
        const double n = double(errors.size());
        rep.rmse_x = std::sqrt(sx / n);
        rep.rmse_y = std::sqrt(sy / n);
        rep.rmse_pos = std::sqrt((sx + sy) / n);
        rep.rmse_omega = std::sqrt(so / n);
    }
    return rep;
}

std::string report_to_text(const std::vector<TrajectoryReport>& rows) {
    std::ostringstream os;
    os << "Trajectory | GT images (#) | Fused images (#) | SSIM (%) | RMSE x/y/omega\n";
    os << "-----------+---------------+------------------+----------+----------------\n";
    char buf[160];
    for (const auto& r : rows) {
        if (r.ssim_defined)
            std::snprintf(buf, sizeof(buf), "%-10s | %13d | %16d | %8.1f | %.2f / %.2f / %.3f\n",
                          r.name.c_str(), r.gt_images, r.fused_images, 100.0 * r.mean_ssim,
                          r.rmse_x, r.rmse_y, r.rmse_omega);
        else
            std::snprintf(buf, sizeof(buf), "%-10s | %13d | %16d | %8s | %.2f / %.2f / %.3f\n",
                          r.name.c_str(), r.gt_images, r.fused_images, "n/a", r.rmse_x, r.rmse_y,
                          r.rmse_omega);
        os << buf;
    }
    // SSIM column: mean over the frames where both the ground-truth and the
    // fused gate produced an image.
    return os.str();
}

std::string report_to_csv(const std::vector<TrajectoryReport>& rows) {
    std::ostringstream os;
    os << "trajectory,frames,gt_images,fused_images,ssim_frames,mean_ssim,rmse_x,rmse_y,"
          "rmse_pos,rmse_omega\n";
    for (const auto& r : rows) {
        os << r.name << ',' << r.frames << ',' << r.gt_images << ',' << r.fused_images << ','
           << r.ssim_frames << ',';
        if (r.ssim_defined)
            os << r.mean_ssim;
        else
            os << "nan";
        os << ',' << r.rmse_x << ',' << r.rmse_y << ',' << r.rmse_pos << ',' << r.rmse_omega
           << '\n';
    }
    return os.str();
}

}  // namespace rcisar

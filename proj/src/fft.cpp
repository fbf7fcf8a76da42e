#include "rcisar/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>

namespace rcisar {

namespace {

// FFTW plan creation is not thread-safe; plans are cached per size.
std::mutex g_plan_mutex;

fftw_plan get_plan(int rows, int cols, fftw_complex* buf) {
    static std::map<std::pair<int, int>, fftw_plan> cache;
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    auto it = cache.find({rows, cols});
    if (it != cache.end()) return it->second;
    // FFTW_ESTIMATE keeps planning deterministic and leaves the buffer intact.
    fftw_plan plan = fftw_plan_dft_2d(rows, cols, buf, buf, FFTW_BACKWARD,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    cache.emplace(std::make_pair(rows, cols), plan);
    return plan;
}

}  // namespace

Eigen::MatrixXcd dft2_backward(
    const Eigen::Ref<const Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic,
                                         Eigen::RowMajor>>& in,
    int out_rows, int out_cols) {
    if (out_rows < in.rows() || out_cols < in.cols())
        throw std::invalid_argument("DFT size must be >= data size");
    std::vector<std::complex<double>> buf(static_cast<size_t>(out_rows) * out_cols, {0.0, 0.0});
    for (int r = 0; r < in.rows(); ++r)
        for (int c = 0; c < in.cols(); ++c) buf[static_cast<size_t>(r) * out_cols + c] = in(r, c);

    auto* raw = reinterpret_cast<fftw_complex*>(buf.data());
    fftw_plan plan = get_plan(out_rows, out_cols, raw);
    fftw_execute_dft(plan, raw, raw);

    Eigen::MatrixXcd out(out_rows, out_cols);
    for (int r = 0; r < out_rows; ++r)
        for (int c = 0; c < out_cols; ++c) out(r, c) = buf[static_cast<size_t>(r) * out_cols + c];
    return out;
}

void fftshift_inplace(Eigen::MatrixXcd& m) {
    const int rows = static_cast<int>(m.rows()), cols = static_cast<int>(m.cols());
    const int rh = rows / 2, ch = cols / 2;
    Eigen::MatrixXcd tmp(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) tmp((r + rh) % rows, (c + ch) % cols) = m(r, c);
    m.swap(tmp);
}

std::vector<double> fftshifted_axis(int n, double rate) {
    std::vector<double> axis(n);
    for (int m = 0; m < n; ++m) axis[m] = (m - n / 2) * rate / n;
    return axis;
}

}  // namespace rcisar

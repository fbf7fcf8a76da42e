#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace rcisar {

/// Unnormalized 2D DFT with the e^{+j2pi} kernel (FFTW backward transform).
/// The input is zero-padded to out_rows x out_cols; both must be >= the data.
Eigen::MatrixXcd dft2_backward(
    const Eigen::Ref<const Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic,
                                         Eigen::RowMajor>>& in,
    int out_rows, int out_cols);

/// Swap half-spaces along both axes so the zero-frequency bin lands at
/// (rows/2, cols/2).
void fftshift_inplace(Eigen::MatrixXcd& m);

/// Frequency axis matching fftshift: axis[m] = (m - n/2) * rate / n.
std::vector<double> fftshifted_axis(int n, double rate);

}  // namespace rcisar

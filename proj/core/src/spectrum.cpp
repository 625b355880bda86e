#include "imuscale/spectrum.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <unsupported/Eigen/FFT>

namespace imuscale {

std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

Spectrum real_dft(std::span<const double> x, std::size_t n_fft) {
  if (n_fft < x.size()) throw std::invalid_argument("real_dft: n_fft shorter than input");
  std::vector<double> padded(n_fft, 0.0);
  std::copy(x.begin(), x.end(), padded.begin());
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  Spectrum out;
  fft.fwd(out, padded);
  out.resize(n_fft / 2 + 1);
  return out;
}

SpectrumSet amplitude_spectra(std::span<const Vec3> a_vis, std::span<const Vec3> a_imu,
                              std::span<const Mat3> rotations, double rate, Window window) {
  const std::size_t n = a_vis.size();
  if (a_imu.size() != n || rotations.size() != n) {
    throw std::invalid_argument("amplitude_spectra: length mismatch");
  }
  if (n < kMinSpectrumSamples) {
    throw std::invalid_argument("amplitude_spectra: need at least " +
                                std::to_string(kMinSpectrumSamples) + " samples, got " +
                                std::to_string(n));
  }
  if (!(rate > 0.0)) throw std::invalid_argument("amplitude_spectra: rate must be positive");

  SpectrumSet out;
  out.n_samples = n;
  out.n_fft = next_power_of_two(n);
  out.rate = rate;
  out.window = window;

  std::vector<double> w(n, 1.0);
  if (window == Window::Hann) {
    for (std::size_t k = 0; k < n; ++k) {
      w[k] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) /
                                  static_cast<double>(n - 1));
    }
  }

  std::vector<double> buf(n);
  for (int i = 0; i < 3; ++i) {
    for (std::size_t k = 0; k < n; ++k) buf[k] = w[k] * a_vis[k][i];
    out.visual[i] = real_dft(buf, out.n_fft);
    for (std::size_t k = 0; k < n; ++k) buf[k] = w[k] * a_imu[k][i];
    out.inertial[i] = real_dft(buf, out.n_fft);
    for (int j = 0; j < 3; ++j) {
      for (std::size_t k = 0; k < n; ++k) buf[k] = w[k] * rotations[k](i, j);
      out.rotation[i][j] = real_dft(buf, out.n_fft);
    }
  }
  out.bias_carrier = real_dft(w, out.n_fft);
  return out;
}

std::array<Spectrum, 3> assemble_inertial(const SpectrumSet& s, const Vec3& bias,
                                          const Vec3& gravity) {
  std::array<Spectrum, 3> out;
  const std::size_t bins = s.bins();
  for (int i = 0; i < 3; ++i) {
    out[i].resize(bins);
    for (std::size_t k = 0; k < bins; ++k) {
      out[i][k] = s.inertial[i][k] - bias[i] * s.bias_carrier[k] -
                  gravity[0] * s.rotation[i][0][k] - gravity[1] * s.rotation[i][1][k] -
                  gravity[2] * s.rotation[i][2][k];
    }
  }
  return out;
}

}  // namespace imuscale

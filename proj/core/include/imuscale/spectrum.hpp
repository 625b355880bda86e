#pragma once

#include <array>
#include <complex>
#include <span>
#include <vector>

#include "imuscale/types.hpp"

namespace imuscale {

using Spectrum = std::vector<std::complex<double>>;

enum class Window { Rectangular, Hann };

/// Per-axis one-sided DFTs of the visual and inertial accelerations plus the
/// carriers needed to assemble the inertial spectrum for any (bias, gravity)
/// by linearity:
///   A_I(f; b, g)_i = F{a_imu_i} - b_i F{w} - sum_j g_j F{R_ij}
/// where w is the window (all ones for Rectangular).
struct SpectrumSet {
  std::size_t n_samples = 0;
  std::size_t n_fft = 0;
  double rate = 0.0;
  Window window = Window::Rectangular;
  std::array<Spectrum, 3> visual;
  std::array<Spectrum, 3> inertial;
  Spectrum bias_carrier;
  std::array<std::array<Spectrum, 3>, 3> rotation;  // rotation[i][j] = F{R[k](i, j)}

  std::size_t bins() const { return n_fft / 2 + 1; }
  double bin_frequency(std::size_t k) const {
    return static_cast<double>(k) * rate / static_cast<double>(n_fft);
  }
};

std::size_t next_power_of_two(std::size_t n);

/// One-sided DFT (n_fft / 2 + 1 bins) of `x`, zero-padded to `n_fft`.
Spectrum real_dft(std::span<const double> x, std::size_t n_fft);

inline constexpr std::size_t kMinSpectrumSamples = 64;

SpectrumSet amplitude_spectra(std::span<const Vec3> a_vis_camera, std::span<const Vec3> a_imu_camera,
                              std::span<const Mat3> rotations, double rate,
                              Window window = Window::Rectangular);

std::array<Spectrum, 3> assemble_inertial(const SpectrumSet& spectra, const Vec3& bias,
                                          const Vec3& gravity);

}  // namespace imuscale

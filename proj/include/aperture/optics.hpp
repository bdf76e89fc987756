#pragma once

// Fourier-optics PSF synthesis for a lens with a thin phase mask in its pupil.
//
// The mask acts as the aperture stop: the usable pupil is the mask footprint
// (grid cells x grid pitch), clipped to the lens's own f/# aperture. For each
// depth and wavelength the pupil function
//
//   P(x, y) = A(x, y) * exp(i * (phi_defocus(d) + phi_mask))
//
// is sampled on an FFT grid whose spacing is chosen per wavelength so that the
// far-field samples land at exactly pixel_pitch / oversample on the sensor.
// |FFT(P)|^2 is cropped around the optical axis, integrated over
// oversample x oversample blocks into sensor pixels, and normalized to unit sum.

#include <array>
#include <cstdint>
#include <vector>

#include "aperture/image.hpp"
#include "aperture/kernels.hpp"

namespace aperture {

inline constexpr int kChannels = 3;
inline constexpr double kMaxMaskHeight = 2e-6;

struct CameraConfig {
  double focal_length = 0.05;      // m
  double f_number = 1.8;
  double focus_distance = 0.85;    // m
  double pixel_pitch = 9.4e-6;     // m
  int sensor_width = 1344;         // px
  int sensor_height = 894;         // px
  std::array<double, kChannels> wavelengths{610e-9, 530e-9, 470e-9};  // R, G, B
  int pupil_samples = 0;           // samples across the pupil; 0 = 4 x mask grid
  int psf_crop = 65;               // odd, sensor pixels
  int oversample = 3;              // odd, far-field samples per sensor pixel

  void validate() const;

  /// Lens-to-sensor distance for the configured focus (thin lens).
  double sensor_distance() const;

  /// Diameter of the lens's own aperture, focal_length / f_number.
  double lens_aperture_diameter() const { return focal_length / f_number; }

  bool operator==(const CameraConfig&) const = default;
};

/// n(lambda) = a + b / lambda^2 (Cauchy). Defaults to the constant 1.5.
struct RefractiveIndex {
  double a = 1.5;
  double b = 0.0;  // m^2
  double operator()(double wavelength) const { return a + b / (wavelength * wavelength); }
  bool operator==(const RefractiveIndex&) const = default;
};

/// Thin transparent plate of varying thickness sitting in the pupil plane.
struct PhaseMask {
  ImageD height_map;                // H x H, meters, each in [0, 2e-6]
  double grid_pitch = 135e-6;       // m per cell
  RefractiveIndex refractive_index;
  std::vector<double> zernike;      // Noll-indexed source coefficients (a_1 first), may be empty

  int grid() const noexcept { return height_map.width(); }
  double diameter() const noexcept { return grid() * grid_pitch; }
  void validate() const;

  /// Height at pupil-plane position (x, y) meters from the axis (nearest cell);
  /// zero outside the mask footprint.
  double height_at(double x, double y) const noexcept;
};

/// Pupil amplitude transmission, a grid of values in [0, 1] spanning a square of
/// side `diameter` centered on the axis; zero outside.
struct ApertureAmplitude {
  ImageD values;
  double diameter = 0.0;  // m

  void validate() const;
  double at(double x, double y) const noexcept;
};

struct Psf {
  double depth = 0.0;       // m
  double wavelength = 0.0;  // m
  ImageD kernel;            // psf_crop x psf_crop, nonnegative, unit sum
};

struct PsfBank {
  std::vector<double> depth_bins;                  // strictly increasing, m
  std::vector<std::array<Psf, kChannels>> psfs;    // [bin][channel]

  const ImageD& kernel(std::size_t bin, int channel) const {
    return psfs[bin][static_cast<std::size_t>(channel)].kernel;
  }
  std::size_t size() const noexcept { return depth_bins.size(); }

  /// Order-sensitive hash over bins and kernel bits; used as a provenance id.
  std::uint64_t fingerprint() const;
};

/// Zernike polynomial Z_j(rho, theta), Noll index j >= 1, Noll normalization.
double zernike_eval(int noll_index, double rho, double theta);

/// Radial order n and signed azimuthal frequency m for Noll index j.
std::pair<int, int> noll_to_nm(int noll_index);

/// Height map sum_j a_j Z_j over the unit disk inscribed in an H x H grid,
/// min-shifted to zero inside the disk, zero outside.
/// Throws OutOfRange when the resulting span exceeds 2 um.
ImageD height_from_zernike(const std::vector<double>& coeffs, int grid, double pitch);

/// Mask synthesized from Zernike coefficients (coefficients kept on the mask).
PhaseMask make_zernike_mask(const std::vector<double>& coeffs, int grid,
                            double pitch = 135e-6);

/// Flat (all-zero) mask, i.e. a plain aperture of the given footprint.
PhaseMask make_zero_mask(int grid, double pitch = 135e-6);

/// Built-in mask coefficients (Noll 1..15, meters of sag). Their 23 x 23
/// synthesis spans just under 2 um.
std::vector<double> default_mask_coefficients();

/// Mask phase (2 pi / lambda)(n(lambda) - 1) h, sampled nearest-neighbor onto a
/// samples x samples grid covering the mask footprint.
ImageD phase_from_height(const PhaseMask& mask, double wavelength, int samples);

/// Diameter of the usable pupil: the mask footprint clipped to the lens aperture.
double effective_pupil_diameter(const PhaseMask& mask, const CameraConfig& config);

/// Binary disk of the effective pupil diameter sampled on a samples x samples grid.
ApertureAmplitude make_circular_aperture(const PhaseMask& mask, const CameraConfig& config);

/// Samples across the pupil actually requested (pupil_samples or 4 x mask grid).
int resolved_pupil_samples(const PhaseMask& mask, const CameraConfig& config);

/// Defocus phase (pi R^2 / lambda)(1/z_f - 1/d) rho^2 sampled on a
/// samples x samples grid spanning the pupil diameter 2R; zero outside rho <= 1.
ImageD defocus_phase(double depth, double wavelength, const CameraConfig& config,
                     double pupil_diameter, int samples);

/// Defocus phase at normalized radius rho (closed form, no grid).
double defocus_phase_at(double rho, double depth, double wavelength,
                        const CameraConfig& config, double pupil_diameter);

/// FFT grid geometry used for one wavelength.
struct PupilSampling {
  int fft_size = 0;         // N x N transform
  double spacing = 0.0;     // pupil-plane sample spacing, m
  double far_field_step = 0.0;  // sensor-plane spacing of the transform samples, m
};

PupilSampling pupil_sampling(const PhaseMask& mask, const CameraConfig& config,
                             double wavelength);

/// Unnormalized PSF intensity together with diagnostic totals.
struct PsfIntensity {
  ImageD kernel;              // binned crop, not normalized
  double crop_energy = 0.0;   // sum of the crop
  double total_energy = 0.0;  // sum over the whole far field
};

PsfIntensity simulate_psf_intensity(double depth, int channel, const PhaseMask& mask,
                                    const ApertureAmplitude& amplitude,
                                    const CameraConfig& config);

Psf simulate_psf(double depth, int channel, const PhaseMask& mask,
                 const ApertureAmplitude& amplitude, const CameraConfig& config);

PsfBank build_psf_bank(const PhaseMask& mask, const ApertureAmplitude& amplitude,
                       const CameraConfig& config, const std::vector<double>& depth_bins,
                       Exec exec = Exec::parallel);

}  // namespace aperture

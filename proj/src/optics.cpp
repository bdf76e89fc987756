#include "aperture/optics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "aperture/fft.hpp"

namespace aperture {
namespace {

constexpr double kPi = std::numbers::pi;
// Allowed rounding slack on the 2 um height ceiling.
constexpr double kHeightSlack = 1e-15;

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

double zernike_radial(int n, int m, double rho) {
  double sum = 0.0;
  for (int k = 0; k <= (n - m) / 2; ++k) {
    const double c = ((k % 2) ? -1.0 : 1.0) * factorial(n - k) /
                     (factorial(k) * factorial((n + m) / 2 - k) * factorial((n - m) / 2 - k));
    sum += c * std::pow(rho, n - 2 * k);
  }
  return sum;
}

int cell_index(double coord, double extent, int cells) {
  const double u = (coord + 0.5 * extent) / extent * cells;
  if (u < 0.0) return -1;
  const int idx = static_cast<int>(std::floor(u));
  return idx >= cells ? -1 : idx;
}

}  // namespace

void CameraConfig::validate() const {
  if (!(focal_length > 0.0)) throw InvalidArgument("camera.focal_length must be > 0");
  if (!(f_number > 0.0)) throw InvalidArgument("camera.f_number must be > 0");
  if (!(focus_distance > focal_length))
    throw InvalidArgument("camera.focus_distance must exceed camera.focal_length");
  if (!(pixel_pitch > 0.0)) throw InvalidArgument("camera.pixel_pitch must be > 0");
  if (sensor_width <= 0 || sensor_height <= 0)
    throw InvalidArgument("camera.sensor_width/height must be > 0");
  for (double w : wavelengths)
    if (!(w > 0.0)) throw InvalidArgument("camera.wavelengths must all be > 0");
  if (pupil_samples < 0) throw InvalidArgument("camera.pupil_samples must be >= 0");
  if (psf_crop < 3 || psf_crop % 2 == 0)
    throw InvalidArgument("camera.psf_crop must be odd and >= 3");
  if (oversample < 1 || oversample % 2 == 0)
    throw InvalidArgument("camera.oversample must be odd and >= 1");
}

double CameraConfig::sensor_distance() const {
  return focal_length * focus_distance / (focus_distance - focal_length);
}

void PhaseMask::validate() const {
  if (height_map.empty() || height_map.width() != height_map.height())
    throw InvalidArgument("phase mask height map must be a nonempty square grid");
  if (!(grid_pitch > 0.0)) throw InvalidArgument("phase mask grid pitch must be > 0");
  for (double h : height_map.pixels()) {
    if (!(h >= 0.0 && h <= kMaxMaskHeight + kHeightSlack))
      throw OutOfRange("phase mask heights must lie in [0, 2e-6] m");
  }
}

double PhaseMask::height_at(double x, double y) const noexcept {
  const int h = grid();
  const int i = cell_index(x, diameter(), h);
  const int j = cell_index(y, diameter(), h);
  if (i < 0 || j < 0) return 0.0;
  return height_map(i, j);
}

void ApertureAmplitude::validate() const {
  if (values.empty()) throw InvalidArgument("aperture amplitude grid is empty");
  if (!(diameter > 0.0)) throw InvalidArgument("aperture diameter must be > 0");
  for (double v : values.pixels())
    if (!(v >= 0.0 && v <= 1.0)) throw OutOfRange("aperture amplitude must lie in [0, 1]");
}

double ApertureAmplitude::at(double x, double y) const noexcept {
  const int i = cell_index(x, diameter, values.width());
  const int j = cell_index(y, diameter, values.height());
  if (i < 0 || j < 0) return 0.0;
  return values(i, j);
}

std::uint64_t PsfBank::fingerprint() const {
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  for (std::size_t b = 0; b < depth_bins.size(); ++b) {
    mix(std::bit_cast<std::uint64_t>(depth_bins[b]));
    for (const auto& psf : psfs[b])
      for (double v : psf.kernel.pixels()) mix(std::bit_cast<std::uint64_t>(v));
  }
  return h;
}

std::pair<int, int> noll_to_nm(int j) {
  if (j < 1) throw InvalidArgument("Noll index must be >= 1, got " + std::to_string(j));
  int n = 0;
  int rem = j - 1;
  while (rem > n) {
    ++n;
    rem -= n;
  }
  // rem now indexes the modes within radial order n.
  int m = (n % 2) + 2 * ((rem + ((n + 1) % 2)) / 2);
  if (m != 0 && j % 2 == 1) m = -m;
  return {n, m};
}

double zernike_eval(int noll_index, double rho, double theta) {
  const auto [n, m] = noll_to_nm(noll_index);
  const int am = std::abs(m);
  const double radial = zernike_radial(n, am, rho);
  if (m == 0) return std::sqrt(n + 1.0) * radial;
  const double norm = std::sqrt(2.0 * (n + 1.0));
  return norm * radial * (m > 0 ? std::cos(am * theta) : std::sin(am * theta));
}

ImageD height_from_zernike(const std::vector<double>& coeffs, int grid, double pitch) {
  if (grid < 3) throw InvalidArgument("Zernike mask grid must be >= 3");
  if (!(pitch > 0.0)) throw InvalidArgument("Zernike mask pitch must be > 0");
  ImageD map(grid, grid);
  ImageD inside(grid, grid);
  const double half = 0.5 * grid;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < grid; ++j) {
    for (int i = 0; i < grid; ++i) {
      const double x = (i + 0.5 - half) / half;
      const double y = (j + 0.5 - half) / half;
      const double rho = std::hypot(x, y);
      if (rho > 1.0) continue;
      const double theta = std::atan2(y, x);
      double v = 0.0;
      for (std::size_t k = 0; k < coeffs.size(); ++k)
        if (coeffs[k] != 0.0) v += coeffs[k] * zernike_eval(static_cast<int>(k) + 1, rho, theta);
      map(i, j) = v;
      inside(i, j) = 1.0;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (hi - lo > kMaxMaskHeight + kHeightSlack) {
    throw OutOfRange("Zernike height span " + std::to_string(hi - lo) +
                     " m exceeds 2e-6 m; rescale the coefficients");
  }
  for (int j = 0; j < grid; ++j)
    for (int i = 0; i < grid; ++i) map(i, j) = inside(i, j) > 0.0 ? map(i, j) - lo : 0.0;
  return map;
}

PhaseMask make_zernike_mask(const std::vector<double>& coeffs, int grid, double pitch) {
  PhaseMask mask;
  mask.height_map = height_from_zernike(coeffs, grid, pitch);
  mask.grid_pitch = pitch;
  mask.zernike = coeffs;
  return mask;
}

PhaseMask make_zero_mask(int grid, double pitch) {
  if (grid < 1) throw InvalidArgument("mask grid must be >= 1");
  PhaseMask mask;
  mask.height_map = ImageD(grid, grid);
  mask.grid_pitch = pitch;
  return mask;
}

std::vector<double> default_mask_coefficients() {
  // Astigmatism-dominated: the PSF elongates along different axes in front of
  // and behind focus, which separates depths on both sides of the focal plane.
  // The continuous surface spans 1.99 um, so any lattice stays within 2 um.
  return {0.0,      0.0,       0.0,       -8.41e-9, 1.709e-7, 6.861e-9, 3.862e-8, -8.299e-9,
          -2.534e-8, 2.933e-8, -1.021e-7, 1.43e-7,  7.945e-8, 6.684e-8, -1.837e-8};
}

ImageD phase_from_height(const PhaseMask& mask, double wavelength, int samples) {
  if (!(wavelength > 0.0)) throw InvalidArgument("wavelength must be > 0");
  if (samples < 1) throw InvalidArgument("phase map samples must be >= 1");
  mask.validate();
  const double n = mask.refractive_index(wavelength);
  const double scale = 2.0 * kPi / wavelength * (n - 1.0);
  const double d = mask.diameter();
  ImageD out(samples, samples);
  for (int j = 0; j < samples; ++j) {
    const double y = ((j + 0.5) / samples - 0.5) * d;
    for (int i = 0; i < samples; ++i) {
      const double x = ((i + 0.5) / samples - 0.5) * d;
      out(i, j) = scale * mask.height_at(x, y);
    }
  }
  return out;
}

double effective_pupil_diameter(const PhaseMask& mask, const CameraConfig& config) {
  return std::min(mask.diameter(), config.lens_aperture_diameter());
}

int resolved_pupil_samples(const PhaseMask& mask, const CameraConfig& config) {
  return config.pupil_samples > 0 ? config.pupil_samples : 4 * mask.grid();
}

ApertureAmplitude make_circular_aperture(const PhaseMask& mask, const CameraConfig& config) {
  const int samples = resolved_pupil_samples(mask, config);
  ApertureAmplitude amp;
  amp.diameter = effective_pupil_diameter(mask, config);
  amp.values = ImageD(samples, samples);
  const double half = 0.5 * samples;
  for (int j = 0; j < samples; ++j) {
    for (int i = 0; i < samples; ++i) {
      const double x = (i + 0.5 - half) / half;
      const double y = (j + 0.5 - half) / half;
      amp.values(i, j) = (x * x + y * y <= 1.0) ? 1.0 : 0.0;
    }
  }
  return amp;
}

double defocus_phase_at(double rho, double depth, double wavelength,
                        const CameraConfig& config, double pupil_diameter) {
  if (!(depth > 0.0)) throw InvalidArgument("depth must be > 0");
  if (rho > 1.0) return 0.0;
  const double r = 0.5 * pupil_diameter;
  return kPi * r * r / wavelength * (1.0 / config.focus_distance - 1.0 / depth) * rho * rho;
}

ImageD defocus_phase(double depth, double wavelength, const CameraConfig& config,
                     double pupil_diameter, int samples) {
  if (!(depth > 0.0)) throw InvalidArgument("depth must be > 0");
  if (samples < 1) throw InvalidArgument("defocus map samples must be >= 1");
  ImageD out(samples, samples);
  const double half = 0.5 * samples;
  for (int j = 0; j < samples; ++j) {
    for (int i = 0; i < samples; ++i) {
      const double rho = std::hypot((i + 0.5 - half) / half, (j + 0.5 - half) / half);
      out(i, j) = defocus_phase_at(rho, depth, wavelength, config, pupil_diameter);
    }
  }
  return out;
}

PupilSampling pupil_sampling(const PhaseMask& mask, const CameraConfig& config,
                             double wavelength) {
  config.validate();
  const int samples = resolved_pupil_samples(mask, config);
  if (samples < mask.grid()) {
    throw InvalidConfiguration("camera.pupil_samples (" + std::to_string(samples) +
                               ") is smaller than the phase-mask grid (" +
                               std::to_string(mask.grid()) + ")");
  }
  const double diameter = effective_pupil_diameter(mask, config);
  const double s = config.sensor_distance();
  const double k = config.oversample;
  const double lambda_max =
      *std::max_element(config.wavelengths.begin(), config.wavelengths.end());

  // Spacing delta = lambda s k / (pitch N) must not exceed diameter / samples
  // for any channel, and the crop must fit inside the far field.
  const double n_min = lambda_max * s * k * samples / (config.pixel_pitch * diameter);
  const int needed = std::max(static_cast<int>(std::ceil(n_min)),
                              config.oversample * config.psf_crop + 2);

  PupilSampling out;
  out.fft_size = fft::fast_size(needed);
  out.spacing = wavelength * s * k / (config.pixel_pitch * out.fft_size);
  out.far_field_step = config.pixel_pitch / k;
  if (diameter / out.spacing > out.fft_size - 2) {
    throw InvalidConfiguration(
        "pupil grid smaller than required support: the pupil spans " +
        std::to_string(diameter / out.spacing) + " samples of a " +
        std::to_string(out.fft_size) + "-point transform; raise camera.oversample");
  }
  return out;
}

PsfIntensity simulate_psf_intensity(double depth, int channel, const PhaseMask& mask,
                                    const ApertureAmplitude& amplitude,
                                    const CameraConfig& config) {
  if (!(depth > 0.0)) throw InvalidArgument("depth must be > 0");
  if (channel < 0 || channel >= kChannels) throw InvalidArgument("channel must be 0..2");
  mask.validate();
  amplitude.validate();
  const double lambda = config.wavelengths[static_cast<std::size_t>(channel)];
  const PupilSampling ps = pupil_sampling(mask, config, lambda);
  const int n = ps.fft_size;
  const double diameter = effective_pupil_diameter(mask, config);
  const double radius = 0.5 * diameter;

  const double defocus = kPi * radius * radius / lambda *
                         (1.0 / config.focus_distance - 1.0 / depth);
  // Largest phase step between neighbouring samples at the pupil rim.
  if (2.0 * std::abs(defocus) * ps.spacing / radius > kPi) {
    throw InvalidConfiguration("pupil grid smaller than required support: defocus at " +
                               std::to_string(depth) + " m aliases; raise pupil sampling");
  }
  const double mask_scale = 2.0 * kPi / lambda * (mask.refractive_index(lambda) - 1.0);

  std::vector<fft::Complex> field(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    const double y = (j - n / 2) * ps.spacing;
    const int row = ((j - n / 2) + n) % n;
    for (int i = 0; i < n; ++i) {
      const double x = (i - n / 2) * ps.spacing;
      const double rho2 = (x * x + y * y) / (radius * radius);
      if (rho2 > 1.0) continue;
      const double a = amplitude.at(x, y);
      if (a == 0.0) continue;
      const double phase = defocus * rho2 + mask_scale * mask.height_at(x, y);
      field[static_cast<std::size_t>(row) * n + ((i - n / 2) + n) % n] = std::polar(a, phase);
    }
  }
  fft::forward(field, n, n);

  PsfIntensity out;
  for (const auto& v : field) out.total_energy += std::norm(v);

  const int crop = config.psf_crop;
  const int half = crop / 2;
  const int k = config.oversample;
  const int kh = k / 2;
  out.kernel = ImageD(crop, crop);
  for (int py = -half; py <= half; ++py) {
    for (int px = -half; px <= half; ++px) {
      double acc = 0.0;
      for (int v = py * k - kh; v <= py * k + kh; ++v) {
        const std::size_t row = static_cast<std::size_t>((v % n + n) % n) * n;
        for (int u = px * k - kh; u <= px * k + kh; ++u) acc += std::norm(field[row + (u % n + n) % n]);
      }
      out.kernel(px + half, py + half) = acc;
      out.crop_energy += acc;
    }
  }
  return out;
}

Psf simulate_psf(double depth, int channel, const PhaseMask& mask,
                 const ApertureAmplitude& amplitude, const CameraConfig& config) {
  PsfIntensity raw = simulate_psf_intensity(depth, channel, mask, amplitude, config);
  if (!(raw.crop_energy > 0.0)) throw InvalidConfiguration("PSF crop captured no energy");
  Psf psf;
  psf.depth = depth;
  psf.wavelength = config.wavelengths[static_cast<std::size_t>(channel)];
  psf.kernel = std::move(raw.kernel);
  for (double& v : psf.kernel.pixels()) v /= raw.crop_energy;
  return psf;
}

PsfBank build_psf_bank(const PhaseMask& mask, const ApertureAmplitude& amplitude,
                       const CameraConfig& config, const std::vector<double>& depth_bins,
                       Exec exec) {
  if (depth_bins.empty()) throw InvalidArgument("depth bins must be nonempty");
  for (std::size_t i = 0; i < depth_bins.size(); ++i) {
    if (!(depth_bins[i] > 0.0)) throw InvalidArgument("depth bins must be > 0");
    if (i > 0 && !(depth_bins[i] > depth_bins[i - 1]))
      throw InvalidArgument("depth bins must be strictly increasing");
  }
  // Surface configuration errors before fanning out.
  for (double lambda : config.wavelengths) (void)pupil_sampling(mask, config, lambda);

  PsfBank bank;
  bank.depth_bins = depth_bins;
  bank.psfs.resize(depth_bins.size());
  const int jobs = static_cast<int>(depth_bins.size()) * kChannels;

  if (exec == Exec::serial) {
    for (int job = 0; job < jobs; ++job) {
      bank.psfs[job / kChannels][job % kChannels] =
          simulate_psf(depth_bins[job / kChannels], job % kChannels, mask, amplitude, config);
    }
    return bank;
  }

  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (int job = 0; job < jobs; ++job) {
    try {
      bank.psfs[job / kChannels][job % kChannels] =
          simulate_psf(depth_bins[job / kChannels], job % kChannels, mask, amplitude, config);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return bank;
}

}  // namespace aperture

// Serial reference vs OpenMP kernels. Arg 0 selects serial, 1 parallel.
// Defines its own main: the packaged benchmark_main archive carries LTO
// bytecode that other compiler versions cannot link.

#include <benchmark/benchmark.h>

#include "aperture/depth.hpp"
#include "aperture/kernels.hpp"
#include "aperture/optics.hpp"
#include "aperture/render.hpp"
#include "aperture/synthetic.hpp"

using namespace aperture;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(0) ? Exec::parallel : Exec::serial; }

struct Fixture {
  CameraConfig camera;
  PhaseMask mask = make_zernike_mask(default_mask_coefficients(), 23);
  DepthBins bins = make_depth_bins(27, 0.5, 6.0);
  PsfBank bank = build_psf_bank(mask, make_circular_aperture(mask, camera), camera, bins.centers);
  SceneFrame scene;
  CodedFrame coded;

  Fixture() {
    const Intrinsics k{240, 240, 159.5, 119.5};
    scene = synthetic::render_scene(synthetic::two_plane_scene(bins.centers[10], bins.centers[16], k.fx),
                                    {0.0, 0.0, 0.0}, k, 320, 240);
    coded = render_coded(scene, quantize_depth(scene, bins), bank);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_Convolve(benchmark::State& state) {
  const ImageD img = synthetic::spectral_noise(320, 240, 1);
  const ImageD& k = fixture().bank.kernel(5, 1);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::convolve(img, k, exec_of(state)));
}

void BM_BoxSum(benchmark::State& state) {
  const ImageD img = synthetic::spectral_noise(320, 240, 2);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::box_sum(img, 21, exec_of(state)));
}

void BM_GaussianBlur(benchmark::State& state) {
  const ImageD img = synthetic::spectral_noise(320, 240, 3);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::gaussian_blur(img, 2.0, exec_of(state)));
}

void BM_RenderCoded(benchmark::State& state) {
  const auto& f = fixture();
  const auto layers = quantize_depth(f.scene, f.bins);
  for (auto _ : state) benchmark::DoNotOptimize(render_coded(f.scene, layers, f.bank, exec_of(state)));
}

void BM_CostVolume(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) benchmark::DoNotOptimize(depth_cost_volume(f.coded, f.bank, {}, exec_of(state)));
}

void BM_PsfBank(benchmark::State& state) {
  const auto& f = fixture();
  const auto amp = make_circular_aperture(f.mask, f.camera);
  for (auto _ : state) benchmark::DoNotOptimize(build_psf_bank(f.mask, amp, f.camera, f.bins.centers, exec_of(state)));
}

}  // namespace

BENCHMARK(BM_Convolve)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BoxSum)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GaussianBlur)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RenderCoded)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CostVolume)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PsfBank)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();

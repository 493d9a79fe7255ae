// Timing harness comparing the serial reference kernels against the
// OpenMP versions, plus the renderer at several thread counts.
//
//   icps_bench [--threads N] [--small]

#include <chrono>
#include <cstdio>
#include <cstring>
#include <vector>

#include "icps/nn/kernels.hpp"
#include "icps/rng.hpp"
#include "icps/scene.hpp"
#include "icps/threads.hpp"

using namespace icps;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<double> random_vec(std::size_t n, SplitMix64& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.next_range(-1.0, 1.0);
  return v;
}

void bench_conv(int threads, bool small) {
  using namespace icps::nn::kernels;
  ConvDims d{};
  d.n = small ? 4 : 32;
  d.h = d.w = small ? 8 : 32;
  d.c = small ? 4 : 16;
  d.kh = d.kw = 3;
  d.f = small ? 8 : 32;
  d.stride = 1;
  d.oh = d.h;
  d.ow = d.w;
  d.pad_top = d.pad_left = 1;

  SplitMix64 rng(7);
  const auto x = random_vec(d.n * d.h * d.w * d.c, rng);
  const auto k = random_vec(d.kh * d.kw * d.c * d.f, rng);
  const auto b = random_vec(d.f, rng);
  std::vector<double> y_serial(d.n * d.oh * d.ow * d.f);
  std::vector<double> y_parallel(y_serial.size());

  const int reps = small ? 10 : 30;
  const double flops =
      2.0 * d.n * d.oh * d.ow * d.f * d.kh * d.kw * d.c * reps;

  auto t0 = Clock::now();
  for (int r = 0; r < reps; ++r)
    serial::conv2d_forward(x.data(), k.data(), b.data(), y_serial.data(), d);
  const double ts = seconds_since(t0);

  set_max_threads(threads);
  t0 = Clock::now();
  for (int r = 0; r < reps; ++r)
    conv2d_forward(x.data(), k.data(), b.data(), y_parallel.data(), d);
  const double tp = seconds_since(t0);

  const bool identical =
      std::memcmp(y_serial.data(), y_parallel.data(),
                  y_serial.size() * sizeof(double)) == 0;
  std::printf("conv2d_forward   serial %7.1f MFLOP/s   omp(%d) %7.1f MFLOP/s"
              "   speedup %.2fx   bitwise %s\n",
              flops / ts / 1e6, threads, flops / tp / 1e6, ts / tp,
              identical ? "equal" : "DIFFERENT");
}

void bench_dense(int threads, bool small) {
  using namespace icps::nn::kernels;
  const std::int64_t n = small ? 16 : 256, in = small ? 32 : 512,
                     out = small ? 32 : 512;
  SplitMix64 rng(11);
  const auto x = random_vec(n * in, rng);
  const auto w = random_vec(in * out, rng);
  const auto b = random_vec(out, rng);
  std::vector<double> y_serial(n * out), y_parallel(n * out);

  const int reps = small ? 20 : 50;
  const double flops = 2.0 * n * in * out * reps;

  auto t0 = Clock::now();
  for (int r = 0; r < reps; ++r)
    serial::dense_forward(x.data(), w.data(), b.data(), y_serial.data(), n, in, out);
  const double ts = seconds_since(t0);

  set_max_threads(threads);
  t0 = Clock::now();
  for (int r = 0; r < reps; ++r)
    dense_forward(x.data(), w.data(), b.data(), y_parallel.data(), n, in, out);
  const double tp = seconds_since(t0);

  const bool identical =
      std::memcmp(y_serial.data(), y_parallel.data(),
                  y_serial.size() * sizeof(double)) == 0;
  std::printf("dense_forward    serial %7.1f MFLOP/s   omp(%d) %7.1f MFLOP/s"
              "   speedup %.2fx   bitwise %s\n",
              flops / ts / 1e6, threads, flops / tp / 1e6, ts / tp,
              identical ? "equal" : "DIFFERENT");
}

void bench_render(int threads, bool small) {
  SceneSpec scene;
  scene.id = 0;
  scene.name = "bench";
  scene.bounds = {{0, 0, 0}, {8, 6, 3}};
  scene.appearance_seed = 3;
  Pose pose;
  pose.position = {4, 3, 1.5};
  const int size = small ? 32 : 128;
  const int reps = small ? 5 : 20;

  set_max_threads(1);
  auto t0 = Clock::now();
  ImageRGB a;
  for (int r = 0; r < reps; ++r) a = render(scene, pose, {}, size, size);
  const double ts = seconds_since(t0);

  set_max_threads(threads);
  t0 = Clock::now();
  ImageRGB b;
  for (int r = 0; r < reps; ++r) b = render(scene, pose, {}, size, size);
  const double tp = seconds_since(t0);

  std::printf("render %dx%d    serial %7.2f img/s      omp(%d) %7.2f img/s"
              "   speedup %.2fx   bitwise %s\n",
              size, size, reps / ts, threads, reps / tp, ts / tp,
              a.pixels == b.pixels ? "equal" : "DIFFERENT");
}

}  // namespace

int main(int argc, char** argv) {
  int threads = 2;
  bool small = false;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--threads") == 0 && i + 1 < argc)
      threads = std::atoi(argv[++i]);
    else if (std::strcmp(argv[i], "--small") == 0)
      small = true;
  }
  bench_dense(threads, small);
  bench_conv(threads, small);
  bench_render(threads, small);
  return 0;
}

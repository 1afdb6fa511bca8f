// Times the serial and OpenMP MLP kernels on the same batch and checks the
// outputs agree bit for bit.
//
//   bench_kernels [batch] [hidden] [reps]

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>

#include "gridlab/mlp.hpp"
#include "gridlab/rng.hpp"

using namespace gridlab;

template <typename Fn>
static double time_ms(int reps, Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count() / reps;
}

int main(int argc, char** argv) {
  const std::size_t batch = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 256;
  const std::size_t hidden = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 128;
  const int reps = argc > 3 ? std::atoi(argv[3]) : 20;
  const std::size_t in = 150, out = 6;

  Mlp net({in, hidden, hidden, out}, 7);
  Rng rng(11);
  TdBatch b;
  b.size = batch;
  for (std::size_t i = 0; i < batch * in; ++i) b.inputs.push_back(rng.bernoulli(0.1) ? 1.0 : 0.0);
  for (std::size_t i = 0; i < batch; ++i) {
    b.actions.push_back(rng.uniform_index(out));
    b.targets.push_back(rng.uniform01() * 10.0);
  }

  std::vector<double> fs, fp;
  Gradients gs, gp;
  double ls = 0, lp = 0;
  const double t_fs = time_ms(reps, [&] { fs = kernels::forward_batch_serial(net, b.inputs, batch); });
  const double t_fp = time_ms(reps, [&] { fp = kernels::forward_batch_parallel(net, b.inputs, batch); });
  const double t_gs = time_ms(reps, [&] { ls = kernels::td_loss_and_gradients_serial(net, b, gs); });
  const double t_gp = time_ms(reps, [&] { lp = kernels::td_loss_and_gradients_parallel(net, b, gp); });

  const bool same = fs == fp && gs.values == gp.values && std::memcmp(&ls, &lp, sizeof ls) == 0;
  std::printf("threads %d  batch %zu  hidden %zu  reps %d\n", omp_get_max_threads(), batch, hidden, reps);
  std::printf("%-10s %12s %12s %8s\n", "kernel", "serial ms", "parallel ms", "speedup");
  std::printf("%-10s %12.3f %12.3f %8.2f\n", "forward", t_fs, t_fp, t_fs / t_fp);
  std::printf("%-10s %12.3f %12.3f %8.2f\n", "td_grad", t_gs, t_gp, t_gs / t_gp);
  std::printf("bitwise identical: %s\n", same ? "yes" : "NO");
  return same ? 0 : 1;
}

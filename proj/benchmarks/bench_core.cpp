#include <benchmark/benchmark.h>

#include "nuclick/morph.hpp"
#include "nuclick/net.hpp"
#include "nuclick/nn/ops.hpp"
#include "nuclick/pipeline.hpp"
#include "nuclick/synth.hpp"

using namespace nuclick;

namespace {

BinaryMask disk_field(int side) {
  BinaryMask m(side, side);
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      const int cx = (x / 32) * 32 + 16;
      const int cy = (y / 32) * 32 + 16;
      m(x, y) = (x - cx) * (x - cx) + (y - cy) * (y - cy) < 13 * 13;
    }
  }
  return m;
}

void BM_Edt(benchmark::State& state) {
  const auto m = disk_field(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(morph::edt(m));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m.pixel_count()));
}
BENCHMARK(BM_Edt)->Arg(64)->Arg(256)->Arg(512);

void BM_Skeletonize(benchmark::State& state) {
  const auto m = disk_field(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(morph::skeletonize(m));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m.pixel_count()));
}
BENCHMARK(BM_Skeletonize)->Arg(64)->Arg(256);

void BM_Conv3x3(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  Rng rng(1);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  nn::Tensor<float> x({4, c, 64, 64});
  nn::Tensor<float> w({c, c, 3, 3});
  for (auto& v : x.storage()) v = u(rng);
  for (auto& v : w.storage()) v = u(rng);
  const auto xv = nn::constant(x);
  const auto wv = nn::constant(w);
  const auto bv = nn::constant(nn::Tensor<float>({c}, 0.0f));
  nn::Context<float> ctx{nullptr, false};
  for (auto _ : state) benchmark::DoNotOptimize(nn::conv2d(ctx, xv, wv, bv));
}
BENCHMARK(BM_Conv3x3)->Arg(8)->Arg(32);

void BM_SegmentClick(benchmark::State& state) {
  Rng rng(2);
  const auto params = net::build<float>(NetworkConfig{}, rng);
  synth::SynthConfig sc;
  sc.seed = 3;
  const auto sample = synth::generate(sc);
  const GuideInput click{GuideInput::Kind::Click, {{48.0, 48.0}}};
  for (auto _ : state) benchmark::DoNotOptimize(pipeline::segment_one(params, sample.image, {click, {}, 1}));
}
BENCHMARK(BM_SegmentClick);

}  // namespace

BENCHMARK_MAIN();

/* Copyright 2026 The featlock Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <benchmark/benchmark.h>

#include <vector>

#include "featlock/data.hpp"
#include "featlock/detector.hpp"
#include "featlock/evaluation.hpp"
#include "featlock/keyed_transforms.hpp"
#include "featlock/rng.hpp"

namespace {

using namespace featlock;

SecretKey bench_key() {
  std::vector<std::uint8_t> bytes(16);
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = static_cast<std::uint8_t>(i * 37 + 11);
  return SecretKey(std::move(bytes));
}

FeatureMap random_map(std::size_t c, std::size_t h, std::size_t w, std::uint64_t seed) {
  Rng rng(seed);
  FeatureMap m(c, h, w);
  for (auto& v : m.values()) v = static_cast<float>(rng.uniform());
  return m;
}

void BM_DerivePermutation(benchmark::State& state) {
  const SecretKey key = bench_key();
  const auto c = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(derive_permutation(key, c, 2));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c));
}
BENCHMARK(BM_DerivePermutation)->Arg(8)->Arg(64)->Arg(512);

void BM_ApplyPermutation(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const FeatureMap x = random_map(c, 24, 24, 1);
  const PermutationVector p = derive_permutation(bench_key(), c);
  for (auto _ : state) benchmark::DoNotOptimize(apply_permutation(x, p));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(x.values().size() * sizeof(float)));
}
BENCHMARK(BM_ApplyPermutation)->Arg(32)->Arg(64);

void BM_EncryptImage(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const Image img = random_map(3, 300, 300, 2);
  const SecretKey key = bench_key();
  for (auto _ : state) benchmark::DoNotOptimize(encrypt_image(img, key, m));
}
BENCHMARK(BM_EncryptImage)->Arg(1)->Arg(4)->Arg(12)->Arg(20)->Arg(60)->Unit(benchmark::kMillisecond);

void BM_Forward(benchmark::State& state) {
  DetectorConfig dc;
  dc.encrypted_sites = {2};
  const Model model(dc, 1);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<Image> images;
  for (std::size_t i = 0; i < n; ++i) images.push_back(random_map(3, dc.input_size, dc.input_size, 10 + i));
  std::vector<const Image*> ptrs;
  for (const auto& im : images) ptrs.push_back(&im);
  const Tensor batch = make_batch(ptrs);
  const std::optional<SecretKey> key = bench_key();
  for (auto _ : state) benchmark::DoNotOptimize(model.forward(batch, key));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Forward)->Arg(1)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_AveragePrecision(benchmark::State& state) {
  const auto images = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  std::vector<std::vector<GroundTruth>> gt(images);
  std::vector<ScoredDetection> dets;
  for (std::size_t i = 0; i < images; ++i) {
    for (int g = 0; g < 3; ++g) {
      const double x = rng.uniform() * 0.6, y = rng.uniform() * 0.6;
      gt[i].push_back({Box{x, y, x + 0.3, y + 0.3}, false});
      for (int d = 0; d < 3; ++d) {
        const double jx = (rng.uniform() - 0.5) * 0.1, jy = (rng.uniform() - 0.5) * 0.1;
        dets.push_back({i, rng.uniform(), Box{x + jx, y + jy, x + jx + 0.3, y + jy + 0.3}});
      }
    }
  }
  for (auto _ : state) benchmark::DoNotOptimize(average_precision(dets, gt));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(dets.size()));
}
BENCHMARK(BM_AveragePrecision)->Arg(100)->Arg(500);

}  // namespace

BENCHMARK_MAIN();

/*=========================================================================
 *
 *  Copyright The flowreg contributors
 *
 *  Licensed under the Apache License, Version 2.0 (the "License");
 *  you may not use this file except in compliance with the License.
 *  You may obtain a copy of the License at
 *
 *         http://www.apache.org/licenses/LICENSE-2.0.txt
 *
 *  Unless required by applicable law or agreed to in writing, software
 *  distributed under the License is distributed on an "AS IS" BASIS,
 *  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *  See the License for the specific language governing permissions and
 *  limitations under the License.
 *
 *=========================================================================*/
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "flowreg/container.hpp"
#include "flowreg/posterior.hpp"

namespace flowreg
{

/// Median of a non-empty sample (mean of the middle pair for even sizes).
double
median(std::vector<double> values);

/// Peak resident set of this process so far, in MiB.
double
peak_rss_mb();

struct Measurement
{
  double seconds = 0.0;
  double peak_rss_mb = 0.0;
  int    result = 0; // value returned by the job
};

/// Runs job in a forked child and reports its wall time and peak resident set
/// (which includes the pages inherited from the parent). Call only while no
/// other thread is running. Throws std::runtime_error if the child fails.
Measurement
measure_in_child(const std::function<int()> & job);

struct BenchRow
{
  std::string stage;
  int         trunc_dim = 0;
  int         repeats = 0;
  int         iterations = 0;
  double      median_seconds = 0.0;
  double      peak_rss_mb = 0.0;
  std::string note;
};

struct BenchOptions
{
  int              repeats = 3;
  int              iterations = 20; // fixed budget; early stopping disabled
  std::vector<int> trunc_dims{ 16, 0 }; // 0 means the full image grid
  double           alpha = 6.0;
  std::uint64_t    seed = 0;
  std::optional<Predictions> predictions; // adds a row from the sidecar timings
};

/// Times the MAP optimizer on one synthetic pair per truncation setting.
std::vector<BenchRow>
run_bench(const PosteriorConfig & cfg, const BenchOptions & options);

std::string
bench_markdown(const std::vector<BenchRow> & rows);

std::string
bench_csv(const std::vector<BenchRow> & rows);

} // namespace flowreg

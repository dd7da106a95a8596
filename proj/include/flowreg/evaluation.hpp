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

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowreg/container.hpp"
#include "flowreg/posterior.hpp"

namespace flowreg
{

struct SummaryStats
{
  std::size_t count = 0;
  double      mean = 0.0;
  double      std = 0.0; // population
  double      min = 0.0;
  double      q25 = 0.0;
  double      median = 0.0;
  double      q75 = 0.0;
  double      max = 0.0;
};

/// Quartiles use linear interpolation between order statistics.
SummaryStats
summarize(std::span<const double> values);

/// One registration: MAP result plus the quantities derived from it.
struct Registration
{
  MapResult        map;
  BandlimitedField displacement;
  SpatialImage     deformed;
};

/// Joint descent on (alpha, v0), or v0-only descent at a fixed alpha.
Registration
register_pair(const SpatialImage &    source,
              const SpatialImage &    target,
              const PosteriorConfig & cfg,
              std::optional<double>   fixed_alpha);

inline constexpr std::array<int, 3> kEvalLabels{ kBackground, kRing, kDisk };

struct PairEvaluation
{
  std::string           id;
  std::string           split;
  double                alpha_map = 0.0;
  double                alpha_pred = 0.0;
  double                alpha_abs_diff = 0.0;
  double                image_error = 0.0; // mean |deformed(pred) - deformed(map)|
  double                target_error_pred = 0.0;
  double                target_error_map = 0.0;
  std::array<double, 3> dice_pred{};
  std::array<double, 3> dice_map{};
  bool                  converged_pred = false;
  bool                  converged_map = false;
};

struct EvalReport
{
  std::vector<PairEvaluation> pairs;
  std::vector<std::string>    missing_ids;  // in the corpus but not predicted
  std::vector<std::string>    unknown_ids;  // predicted but not in the corpus
  SummaryStats                alpha_abs_diff;
  SummaryStats                image_error;
  std::array<SummaryStats, 3> dice_pred;
  std::array<SummaryStats, 3> dice_map;
  double                      wall_seconds = 0.0;
  double                      peak_rss_mb = 0.0;
};

struct EvalOptions
{
  std::string                        split;  // empty: every completed record
  std::optional<std::filesystem::path> error_map_dir;
  int                                jobs = 1;
};

/// Re-registers every completed record at its predicted alpha and at its MAP
/// alpha (both fixed, both from v0 = 0) and compares the deformed sources and
/// warped labels. Identical alphas give identical registrations.
EvalReport
evaluate_corpus(const std::filesystem::path & corpus_dir, const Predictions & predictions, const EvalOptions & options = {});

std::string
report_json(const EvalReport & report);

std::string
report_csv(const EvalReport & report);

} // namespace flowreg

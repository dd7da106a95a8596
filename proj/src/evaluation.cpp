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
#include "flowreg/evaluation.hpp"

#include "flowreg/benchmark.hpp"
#include "flowreg/errors.hpp"
#include "flowreg/shooting.hpp"
#include "flowreg/synth.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <thread>

namespace flowreg
{

using nlohmann::json;

SummaryStats
summarize(std::span<const double> values)
{
  SummaryStats s;
  s.count = values.size();
  if (values.empty())
    return s;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto quantile = [&](double q) {
    const double pos = q * (sorted.size() - 1);
    const auto   lo = static_cast<std::size_t>(std::floor(pos));
    const auto   hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - lo) * (sorted[hi] - sorted[lo]);
  };
  double sum = 0.0;
  for (double v : sorted)
    sum += v;
  s.mean = sum / sorted.size();
  double var = 0.0;
  for (double v : sorted)
    var += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(var / sorted.size());
  s.min = sorted.front();
  s.max = sorted.back();
  s.q25 = quantile(0.25);
  s.median = quantile(0.5);
  s.q75 = quantile(0.75);
  return s;
}

Registration
register_pair(const SpatialImage &    source,
              const SpatialImage &    target,
              const PosteriorConfig & cfg,
              std::optional<double>   fixed_alpha)
{
  MapOptions options;
  if (fixed_alpha)
  {
    options.estimate_alpha = false;
    options.fixed_alpha = *fixed_alpha;
  }
  Registration out;
  out.map = map_estimate(source, target, cfg, options);
  const SpectralOperator op(out.map.v0.trunc_dims(), out.map.v0.grid_dims(), out.map.alpha_opt, cfg.power);
  out.displacement = shoot(out.map.v0, op, cfg.integrator()).displacement();
  out.deformed = warp_image(source, out.displacement);
  return out;
}

namespace
{

PairEvaluation
evaluate_record(const CorpusRecord & record, double alpha_pred, const EvalOptions & options)
{
  PairEvaluation e;
  e.id = record.id;
  e.split = record.split;
  e.alpha_map = record.alpha_map;
  e.alpha_pred = alpha_pred;
  e.alpha_abs_diff = std::abs(alpha_pred - record.alpha_map);

  const auto by_map = register_pair(record.source, record.target, record.config, record.alpha_map);
  const auto by_pred =
    alpha_pred == record.alpha_map ? by_map : register_pair(record.source, record.target, record.config, alpha_pred);

  e.image_error = mean_abs_difference(by_pred.deformed, by_map.deformed);
  e.target_error_pred = mean_abs_difference(by_pred.deformed, record.target);
  e.target_error_map = mean_abs_difference(by_map.deformed, record.target);
  e.converged_pred = by_pred.map.converged;
  e.converged_map = by_map.map.converged;

  if (!record.source_labels.labels.empty() && !record.target_labels.labels.empty())
  {
    const auto warped_pred = warp_labels(record.source_labels, to_spatial(by_pred.displacement));
    const auto warped_map = warp_labels(record.source_labels, to_spatial(by_map.displacement));
    for (std::size_t i = 0; i < kEvalLabels.size(); ++i)
    {
      e.dice_pred[i] = dice(warped_pred, record.target_labels, kEvalLabels[i]);
      e.dice_map[i] = dice(warped_map, record.target_labels, kEvalLabels[i]);
    }
  }
  else
  {
    e.dice_pred.fill(std::nan(""));
    e.dice_map.fill(std::nan(""));
  }

  if (options.error_map_dir)
  {
    const auto error = abs_difference(by_pred.deformed, by_map.deformed);
    write_flat_image(*options.error_map_dir / (record.id + "_error"), error);
    if (error.rank() == 2)
    {
      double peak = 0.0;
      for (double v : error.values())
        peak = std::max(peak, v);
      write_pgm(*options.error_map_dir / (record.id + "_error.pgm"), error, 8, 0.0, peak > 0.0 ? peak : 1.0);
    }
  }
  return e;
}

json
stats_json(const SummaryStats & s)
{
  return json{ { "count", s.count }, { "mean", s.mean }, { "std", s.std },       { "min", s.min },
               { "q25", s.q25 },     { "median", s.median }, { "q75", s.q75 }, { "max", s.max } };
}

const char *
label_name(int label)
{
  switch (label)
  {
    case kBackground:
      return "background";
    case kRing:
      return "ring";
    case kDisk:
      return "disk";
    default:
      return "unknown";
  }
}

} // namespace

EvalReport
evaluate_corpus(const std::filesystem::path & corpus_dir, const Predictions & predictions, const EvalOptions & options)
{
  const auto start = std::chrono::steady_clock::now();
  const auto manifest = read_manifest(corpus_dir / "manifest.json");

  EvalReport                 report;
  std::vector<std::string>   ids;
  for (const auto & entry : manifest.records)
  {
    if (entry.status != "ok" || (!options.split.empty() && entry.split != options.split))
      continue;
    if (predictions.alpha.count(entry.id) == 0)
      report.missing_ids.push_back(entry.id);
    else
      ids.push_back(entry.id);
  }
  for (const auto & [id, alpha] : predictions.alpha)
    if (manifest.find(id) == nullptr)
      report.unknown_ids.push_back(id);

  report.pairs.resize(ids.size());
  std::vector<std::string> failures(ids.size());
  std::atomic<std::size_t> next{ 0 };
  const auto               worker = [&]() {
    for (std::size_t i = next++; i < ids.size(); i = next++)
    {
      try
      {
        const auto record = read_record(corpus_dir / "records" / ids[i]);
        report.pairs[i] = evaluate_record(record, predictions.alpha.at(ids[i]), options);
      }
      catch (const std::exception & e)
      {
        failures[i] = e.what();
      }
    }
  };
  const int                jobs = std::max(1, std::min<int>(options.jobs, static_cast<int>(ids.size())));
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j)
    pool.emplace_back(worker);
  worker();
  for (auto & t : pool)
    t.join();
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (!failures[i].empty())
      throw IoError("evaluation of " + ids[i] + " failed: " + failures[i]);

  std::vector<double> diffs, errors;
  std::array<std::vector<double>, 3> dp, dm;
  for (const auto & p : report.pairs)
  {
    diffs.push_back(p.alpha_abs_diff);
    errors.push_back(p.image_error);
    for (std::size_t i = 0; i < 3; ++i)
    {
      if (!std::isnan(p.dice_pred[i]))
        dp[i].push_back(p.dice_pred[i]);
      if (!std::isnan(p.dice_map[i]))
        dm[i].push_back(p.dice_map[i]);
    }
  }
  report.alpha_abs_diff = summarize(diffs);
  report.image_error = summarize(errors);
  for (std::size_t i = 0; i < 3; ++i)
  {
    report.dice_pred[i] = summarize(dp[i]);
    report.dice_map[i] = summarize(dm[i]);
  }
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report.peak_rss_mb = peak_rss_mb();
  return report;
}

std::string
report_json(const EvalReport & report)
{
  json pairs = json::array();
  for (const auto & p : report.pairs)
  {
    json dice_pred = json::object(), dice_map = json::object();
    for (std::size_t i = 0; i < 3; ++i)
    {
      dice_pred[label_name(kEvalLabels[i])] = std::isnan(p.dice_pred[i]) ? json(nullptr) : json(p.dice_pred[i]);
      dice_map[label_name(kEvalLabels[i])] = std::isnan(p.dice_map[i]) ? json(nullptr) : json(p.dice_map[i]);
    }
    pairs.push_back(json{ { "id", p.id },
                          { "split", p.split },
                          { "alpha_map", p.alpha_map },
                          { "alpha_pred", p.alpha_pred },
                          { "alpha_abs_diff", p.alpha_abs_diff },
                          { "image_error", p.image_error },
                          { "target_error_pred", p.target_error_pred },
                          { "target_error_map", p.target_error_map },
                          { "dice_pred", dice_pred },
                          { "dice_map", dice_map },
                          { "converged_pred", p.converged_pred },
                          { "converged_map", p.converged_map } });
  }
  json dice_pred = json::object(), dice_map = json::object();
  for (std::size_t i = 0; i < 3; ++i)
  {
    dice_pred[label_name(kEvalLabels[i])] = stats_json(report.dice_pred[i]);
    dice_map[label_name(kEvalLabels[i])] = stats_json(report.dice_map[i]);
  }
  const json doc{ { "summary",
                    { { "pairs", report.pairs.size() },
                      { "alpha_abs_diff", stats_json(report.alpha_abs_diff) },
                      { "image_error", stats_json(report.image_error) },
                      { "dice_pred", dice_pred },
                      { "dice_map", dice_map } } },
                  { "missing_ids", report.missing_ids },
                  { "unknown_ids", report.unknown_ids },
                  { "pairs", pairs },
                  { "timing", { { "wall_seconds", report.wall_seconds }, { "peak_rss_mb", report.peak_rss_mb } } } };
  return doc.dump(2);
}

std::string
report_csv(const EvalReport & report)
{
  std::ostringstream out;
  out << std::setprecision(17);
  out << "id,split,alpha_map,alpha_pred,alpha_abs_diff,image_error,target_error_pred,target_error_map";
  for (int label : kEvalLabels)
    out << ",dice_pred_" << label_name(label) << ",dice_map_" << label_name(label);
  out << '\n';
  for (const auto & p : report.pairs)
  {
    out << p.id << ',' << p.split << ',' << p.alpha_map << ',' << p.alpha_pred << ',' << p.alpha_abs_diff << ','
        << p.image_error << ',' << p.target_error_pred << ',' << p.target_error_map;
    for (std::size_t i = 0; i < 3; ++i)
      out << ',' << p.dice_pred[i] << ',' << p.dice_map[i];
    out << '\n';
  }
  return out.str();
}

} // namespace flowreg

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
// flowreg: generate synthetic corpora, register image pairs, evaluate
// predicted regularity parameters and benchmark the MAP optimizer.
//
// Exit codes: 0 ran to completion (convergence is reported in the outputs),
// 1 usage error, 2 I/O error, 3 numerical failure after retries.

#include "flowreg/benchmark.hpp"
#include "flowreg/container.hpp"
#include "flowreg/errors.hpp"
#include "flowreg/evaluation.hpp"
#include "flowreg/posterior.hpp"
#include "flowreg/shooting.hpp"
#include "flowreg/synth.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <atomic>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <random>
#include <thread>

namespace
{

using namespace flowreg;
using nlohmann::json;

enum ExitCode : int
{
  kOk = 0,
  kUsage = 1,
  kIo = 2,
  kNumerical = 3
};

void
write_text(const fs::path & path, const std::string & text)
{
  if (path.has_parent_path())
    fs::create_directories(path.parent_path());
  std::ofstream out(path);
  out << text;
  if (!out)
    throw IoError("cannot write " + path.string());
}

PosteriorConfig
config_or_default(const std::string & path)
{
  return path.empty() ? PosteriorConfig{} : load_config(path);
}

std::string
trace_csv(const MapResult & r)
{
  std::ostringstream out;
  out << std::setprecision(17) << "iteration,energy,alpha,grad_alpha,grad_v0_sq\n";
  for (std::size_t i = 0; i < r.energy_trace.size(); ++i)
  {
    out << i << ',' << r.energy_trace[i] << ',' << r.alpha_trace[i];
    if (i == 0)
      out << ",,\n";
    else
      out << ',' << r.grad_alpha_trace[i - 1] << ',' << r.grad_v0_trace[i - 1] << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// generate

struct GenerateArgs
{
  std::size_t         n = 10;
  std::vector<double> alphas;
  std::vector<double> alpha_range;
  std::uint64_t       seed = 0;
  std::string         out;
  std::string         config;
  int                 jobs = 1;
  bool                skip_map = false;
  double              ramp_width = 1.0;
};

double
alpha_for(const GenerateArgs & args, std::size_t i)
{
  if (!args.alphas.empty())
    return args.alphas[i % args.alphas.size()];
  std::mt19937_64                        rng(derive_seed(args.seed, "alpha", i));
  std::uniform_real_distribution<double> u(args.alpha_range[0], args.alpha_range[1]);
  return u(rng);
}

CorpusRecord
generate_one(const GenerateArgs & args, const PosteriorConfig & cfg, std::size_t i, const std::string & split)
{
  CorpusRecord record;
  record.id = record_id(i);
  record.split = split;
  record.seed = derive_seed(args.seed, "pair", i);
  record.config = cfg;
  auto spec = random_bulleye(record.seed);
  spec.ramp_width = args.ramp_width;
  record.bulleye = spec;
  const double alpha = alpha_for(args, i);
  record.alpha_true = alpha;
  try
  {
    auto pair = synthesize_pair(spec, alpha, record.seed, cfg);
    record.sample_seed = pair.sample_seed;
    record.source = std::move(pair.source);
    record.target = std::move(pair.target);
    record.source_labels = std::move(pair.source_labels);
    record.target_labels = std::move(pair.target_labels);
    record.v0_true = std::move(pair.v0_true);
    if (!args.skip_map)
    {
      const auto start = std::chrono::steady_clock::now();
      auto       result = map_estimate(record.source, record.target, cfg);
      record.map_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      record.alpha_map = result.alpha_opt;
      record.v0_map = std::move(result.v0);
      record.converged = result.converged;
      record.iterations = result.iterations_run;
      record.stop_reason = result.stop_reason;
    }
  }
  catch (const NumericalError & e)
  {
    record.status = "failed";
    record.error = e.what();
  }
  return record;
}

int
run_generate(const GenerateArgs & args)
{
  if (args.alphas.empty() == args.alpha_range.empty())
    throw std::invalid_argument("give exactly one of --alphas or --alpha-range");
  if (!args.alpha_range.empty() && !(args.alpha_range[0] > 0.0 && args.alpha_range[1] >= args.alpha_range[0]))
    throw std::invalid_argument("--alpha-range needs 0 < lo <= hi");
  for (double a : args.alphas)
    if (!(a > 0.0))
      throw std::invalid_argument("--alphas must be positive");
  const auto cfg = config_or_default(args.config);

  const fs::path out(args.out);
  fs::create_directories(out / "records");
  const auto manifest_path = out / "manifest.json";

  auto splits = assign_splits(args.n, args.seed);
  std::optional<Manifest> previous;
  if (fs::exists(manifest_path))
  {
    previous = read_manifest(manifest_path);
    if (previous->seed != args.seed)
      throw std::invalid_argument("existing corpus was generated with a different seed");
    for (std::size_t i = 0; i < args.n; ++i)
      if (const auto * e = previous->find(record_id(i)))
        splits[i] = e->split;
  }

  Manifest manifest;
  manifest.seed = args.seed;
  manifest.records.resize(args.n);
  std::mutex               manifest_mutex;
  std::atomic<std::size_t> next{ 0 };
  std::atomic<int>         failed{ 0 };

  const auto entry_of = [](const CorpusRecord & r) {
    ManifestEntry e;
    e.id = r.id;
    e.split = r.split;
    e.status = r.status;
    e.error = r.error;
    e.seed = r.seed;
    e.alpha_true = r.alpha_true;
    if (r.status == "ok" && r.v0_map.components() > 0)
      e.alpha_map = r.alpha_map;
    return e;
  };

  const auto worker = [&]() {
    for (std::size_t i = next++; i < args.n; i = next++)
    {
      const auto   dir = out / "records" / record_id(i);
      CorpusRecord record;
      if (record_complete(dir))
      {
        record = read_record(dir);
      }
      else
      {
        record = generate_one(args, cfg, i, splits[i]);
        write_record(dir, record);
      }
      if (record.status != "ok")
        ++failed;
      const std::lock_guard lock(manifest_mutex);
      manifest.records[i] = entry_of(record);
      std::clog << record.id << ' ' << record.status << " alpha_true " << record.alpha_true.value_or(0.0)
                << " alpha_map " << record.alpha_map << '\n';
    }
  };
  std::vector<std::thread> pool;
  for (int j = 1; j < std::max(1, args.jobs); ++j)
    pool.emplace_back(worker);
  worker();
  for (auto & t : pool)
    t.join();

  write_manifest(manifest_path, manifest);
  std::cout << "wrote " << args.n << " records to " << out << " (" << failed << " failed)\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// register

struct RegisterArgs
{
  std::string           source;
  std::string           target;
  std::optional<double> alpha;
  bool                  estimate = false;
  std::string           config;
  std::string           out;
};

int
run_register(const RegisterArgs & args)
{
  if (args.estimate == args.alpha.has_value())
    throw std::invalid_argument("give exactly one of --alpha or --estimate");
  const auto cfg = config_or_default(args.config);
  const auto source = read_image(args.source);
  const auto target = read_image(args.target);
  if (source.dims() != target.dims())
    throw ShapeError("source and target dimensions differ");

  const auto reg = register_pair(source, target, cfg, args.alpha);
  const auto det = jacobian_determinant_map(reg.displacement);
  const auto error = abs_difference(reg.deformed, target);
  const fs::path out(args.out);
  fs::create_directories(out);

  write_flat_image(out / "deformed", reg.deformed);
  write_vector_image(out / "displacement", to_spatial(reg.displacement));
  write_field(out / "displacement_coeffs", reg.displacement);
  write_field(out / "v0", reg.map.v0);
  write_flat_image(out / "jacobian_det", det);
  write_flat_image(out / "error_map", error);
  if (source.rank() == 2)
  {
    write_pgm(out / "deformed.pgm", reg.deformed);
    double peak = 0.0;
    for (double v : error.values())
      peak = std::max(peak, v);
    write_pgm(out / "error_map.pgm", error, 8, 0.0, peak > 0.0 ? peak : 1.0);
  }
  write_text(out / "trace.csv", trace_csv(reg.map));

  double min_det = det[0];
  for (double v : det.values())
    min_det = std::min(min_det, v);
  const json result{ { "converged", reg.map.converged },
                     { "stop_reason", reg.map.stop_reason },
                     { "alpha", reg.map.alpha_opt },
                     { "alpha_estimated", args.estimate },
                     { "iterations", reg.map.iterations_run },
                     { "rejected_steps", reg.map.rejected_steps },
                     { "energy_initial", reg.map.energy_trace.front() },
                     { "energy_final", reg.map.energy_trace.back() },
                     { "mean_abs_error", mean_abs_difference(reg.deformed, target) },
                     { "rms_error", rms_difference(reg.deformed, target) },
                     { "min_jacobian_det", min_det },
                     { "config", json::parse(config_to_json_text(cfg)) } };
  write_text(out / "result.json", result.dump(2) + "\n");
  std::cout << result.dump(2) << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs
{
  std::string corpus;
  std::string predictions;
  std::string out;
  std::string split;
  int         jobs = 1;
  bool        error_maps = false;
};

int
run_evaluate(const EvaluateArgs & args)
{
  const auto     predictions = read_predictions(args.predictions);
  const fs::path out(args.out);
  EvalOptions    options;
  options.split = args.split;
  options.jobs = args.jobs;
  if (args.error_maps)
    options.error_map_dir = out / "error_maps";
  const auto report = evaluate_corpus(args.corpus, predictions, options);
  write_text(out / "report.json", report_json(report) + "\n");
  write_text(out / "report.csv", report_csv(report));
  for (const auto & id : report.missing_ids)
    std::clog << "warning: no prediction for " << id << '\n';
  for (const auto & id : report.unknown_ids)
    std::clog << "warning: prediction for unknown id " << id << '\n';
  std::cout << "evaluated " << report.pairs.size() << " pairs; mean |alpha_pred - alpha_map| "
            << report.alpha_abs_diff.mean << ", mean image error " << report.image_error.mean << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs
{
  std::string      config;
  std::string      out;
  std::string      predictions;
  BenchOptions     options;
};

int
run_bench_command(BenchArgs args)
{
  const auto cfg = config_or_default(args.config);
  if (!args.predictions.empty())
    args.options.predictions = read_predictions(args.predictions);
  const auto rows = run_bench(cfg, args.options);
  const auto table = bench_markdown(rows);
  if (!args.out.empty())
  {
    write_text(fs::path(args.out) / "bench.md", table);
    write_text(fs::path(args.out) / "bench.csv", bench_csv(rows));
  }
  std::cout << table;
  return kOk;
}

// ---------------------------------------------------------------------------
// inspect

json
describe_record(const fs::path & dir)
{
  const auto r = read_record(dir);
  json       doc{ { "id", r.id },
                  { "split", r.split },
                  { "status", r.status },
                  { "alpha_true", r.alpha_true ? json(*r.alpha_true) : json(nullptr) },
                  { "alpha_map", r.alpha_map },
                  { "converged", r.converged },
                  { "iterations", r.iterations },
                  { "stop_reason", r.stop_reason },
                  { "dims", r.source.dims() } };
  if (!r.error.empty())
    doc["error"] = r.error;
  if (r.v0_map.components() > 0)
  {
    const SpectralOperator op(r.v0_map.trunc_dims(), r.v0_map.grid_dims(), r.alpha_map, r.config.power);
    const auto             u = shoot(r.v0_map, op, r.config.integrator()).displacement();
    const auto             det = jacobian_determinant_map(u);
    double                 min_det = det[0];
    for (double v : det.values())
      min_det = std::min(min_det, v);
    doc["min_jacobian_det"] = min_det;
    doc["mean_abs_error"] = mean_abs_difference(warp_image(r.source, u), r.target);
  }
  return doc;
}

int
run_inspect(const std::string & target)
{
  const fs::path path(target);
  json           doc;
  if (fs::is_directory(path) && fs::exists(path / "manifest.json"))
  {
    const auto m = read_manifest(path / "manifest.json");
    std::map<std::string, int> by_split, by_status;
    for (const auto & e : m.records)
    {
      ++by_split[e.split];
      ++by_status[e.status];
    }
    doc = json{ { "corpus", path.string() }, { "seed", m.seed }, { "records", m.records.size() },
                { "splits", by_split },      { "status", by_status } };
  }
  else if (fs::is_directory(path))
  {
    doc = describe_record(path);
  }
  else if (path.extension() == ".csv")
  {
    const auto p = read_predictions(path);
    doc = json{ { "predictions", p.alpha.size() }, { "sidecar", p.sidecar.has_value() } };
  }
  else
  {
    const auto image = read_image(path);
    double     lo = image[0], hi = image[0];
    for (double v : image.values())
    {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    doc = json{ { "image", path.string() }, { "dims", image.dims() }, { "min", lo }, { "max", hi } };
  }
  std::cout << doc.dump(2) << '\n';
  return kOk;
}

} // namespace

int
main(int argc, char ** argv)
{
  CLI::App app{ "Bandlimited diffeomorphic registration with automatic regularity estimation" };
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "Master seed for every random stream")->envname("FLOWREG_SEED");

  GenerateArgs gen;
  auto *       generate = app.add_subcommand("generate", "Synthesize bull-eye pairs and attach MAP estimates");
  generate->add_option("-n,--n-pairs", gen.n, "Number of pairs")->check(CLI::PositiveNumber);
  auto * alphas = generate->add_option("--alphas", gen.alphas, "Ground-truth alphas, cycled over pairs")->delimiter(',');
  auto * range = generate->add_option("--alpha-range", gen.alpha_range, "Uniform ground-truth range lo,hi")
                   ->delimiter(',')
                   ->expected(2);
  alphas->excludes(range);
  generate->add_option("-o,--out", gen.out, "Corpus directory")->required();
  generate->add_option("-c,--config", gen.config, "JSON configuration");
  generate->add_option("-j,--jobs", gen.jobs, "Worker threads")->check(CLI::PositiveNumber);
  generate->add_option("--ramp-width", gen.ramp_width, "Edge ramp in pixels (0 = binary)")->check(CLI::NonNegativeNumber);
  generate->add_flag("--skip-map", gen.skip_map, "Only synthesize, do not run the MAP estimate");

  RegisterArgs reg;
  auto *       registration = app.add_subcommand("register", "Register a source image to a target image");
  registration->add_option("-s,--source", reg.source, "Source image (.pgm or flat .json/.f64)")->required();
  registration->add_option("-t,--target", reg.target, "Target image")->required();
  auto * fixed = registration->add_option("--alpha", reg.alpha, "Fixed regularity parameter");
  auto * estimate = registration->add_flag("--estimate", reg.estimate, "Estimate alpha jointly (MAP)");
  fixed->excludes(estimate);
  registration->add_option("-c,--config", reg.config, "JSON configuration");
  registration->add_option("-o,--out", reg.out, "Output directory")->required();

  EvaluateArgs ev;
  auto *       evaluate = app.add_subcommand("evaluate", "Compare predicted and MAP regularity on a corpus");
  evaluate->add_option("--corpus", ev.corpus, "Corpus directory")->required();
  evaluate->add_option("--predictions", ev.predictions, "CSV with id,alpha_pred")->required();
  evaluate->add_option("-o,--out", ev.out, "Report directory")->required();
  evaluate->add_option("--split", ev.split, "Only this split (train, validation, test)");
  evaluate->add_option("-j,--jobs", ev.jobs, "Worker threads")->check(CLI::PositiveNumber);
  evaluate->add_flag("--error-maps", ev.error_maps, "Write per-pair error maps");

  BenchArgs bench_args;
  auto *    bench = app.add_subcommand("bench", "Time and memory of the MAP optimizer");
  bench->add_option("-c,--config", bench_args.config, "JSON configuration");
  bench->add_option("-r,--repeats", bench_args.options.repeats, "Repeats per setting (median reported)")
    ->check(CLI::PositiveNumber);
  bench->add_option("--iters", bench_args.options.iterations, "Fixed iteration budget")->check(CLI::PositiveNumber);
  bench->add_option("--trunc", bench_args.options.trunc_dims, "Truncation sizes, 0 = full grid")->delimiter(',');
  bench->add_option("--alpha", bench_args.options.alpha, "Ground-truth alpha of the benchmark pair");
  bench->add_option("--predictions", bench_args.predictions, "Predictions CSV whose sidecar holds inference timings");
  bench->add_option("-o,--out", bench_args.out, "Directory for bench.md and bench.csv");

  std::string inspect_path;
  auto *      inspect = app.add_subcommand("inspect", "Summarize a corpus, record, image or predictions file");
  inspect->add_option("path", inspect_path, "Path to inspect")->required();

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError & e)
  {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try
  {
    if (generate->parsed())
    {
      gen.seed = seed;
      return run_generate(gen);
    }
    if (registration->parsed())
      return run_register(reg);
    if (evaluate->parsed())
      return run_evaluate(ev);
    if (bench->parsed())
    {
      bench_args.options.seed = seed;
      return run_bench_command(bench_args);
    }
    if (inspect->parsed())
      return run_inspect(inspect_path);
  }
  catch (const NumericalError & e)
  {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  }
  catch (const IoError & e)
  {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  }
  catch (const std::filesystem::filesystem_error & e)
  {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  }
  catch (const std::invalid_argument & e)
  {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  }
  catch (const std::exception & e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  }
  return kUsage;
}

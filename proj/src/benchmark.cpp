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
#include "flowreg/benchmark.hpp"

#include "flowreg/synth.hpp"

#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace flowreg
{

double
median(std::vector<double> values)
{
  if (values.empty())
    throw std::invalid_argument("median of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double
peak_rss_mb()
{
  rusage usage{};
  getrusage(RUSAGE_SELF, &usage);
  return usage.ru_maxrss / 1024.0; // ru_maxrss is in KiB on Linux
}

Measurement
measure_in_child(const std::function<int()> & job)
{
  int fds[2];
  if (pipe(fds) != 0)
    throw std::runtime_error(std::string("pipe: ") + std::strerror(errno));

  const pid_t pid = fork();
  if (pid < 0)
    throw std::runtime_error(std::string("fork: ") + std::strerror(errno));
  if (pid == 0)
  {
    close(fds[0]);
    struct
    {
      double seconds;
      int    result;
      int    ok;
    } message{ 0.0, 0, 0 };
    try
    {
      const auto start = std::chrono::steady_clock::now();
      message.result = job();
      message.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      message.ok = 1;
    }
    catch (...)
    {
      message.ok = 0;
    }
    const auto written = write(fds[1], &message, sizeof(message));
    _exit(written == static_cast<ssize_t>(sizeof(message)) && message.ok ? 0 : 1);
  }

  close(fds[1]);
  struct
  {
    double seconds;
    int    result;
    int    ok;
  } message{ 0.0, 0, 0 };
  const auto got = read(fds[0], &message, sizeof(message));
  close(fds[0]);

  int    status = 0;
  rusage usage{};
  if (wait4(pid, &status, 0, &usage) != pid)
    throw std::runtime_error("wait4 failed");
  if (got != static_cast<ssize_t>(sizeof(message)) || !WIFEXITED(status) || WEXITSTATUS(status) != 0 || !message.ok)
    throw std::runtime_error("benchmark child failed");
  return Measurement{ message.seconds, usage.ru_maxrss / 1024.0, message.result };
}

std::vector<BenchRow>
run_bench(const PosteriorConfig & cfg, const BenchOptions & options)
{
  if (options.repeats < 1 || options.iterations < 1)
    throw std::invalid_argument("bench: repeats and iterations must be positive");
  const auto spec = random_bulleye(options.seed);
  const auto pair = synthesize_pair(spec, options.alpha, options.seed, cfg);
  const int  full = *std::max_element(spec.dims.begin(), spec.dims.end());

  std::vector<BenchRow> rows;
  for (int trunc : options.trunc_dims)
  {
    PosteriorConfig run_cfg = cfg;
    run_cfg.trunc_dim = trunc == 0 ? full : trunc;
    run_cfg.max_iters = options.iterations;
    run_cfg.q_min = options.iterations + 1;

    std::vector<double> seconds;
    double              rss = 0.0;
    int                 iterations = 0;
    for (int r = 0; r < options.repeats; ++r)
    {
      const auto m = measure_in_child([&]() { return map_estimate(pair.source, pair.target, run_cfg).iterations_run; });
      seconds.push_back(m.seconds);
      rss = std::max(rss, m.peak_rss_mb);
      iterations = m.result;
    }
    BenchRow row;
    row.stage = trunc == 0 ? "MAP, full grid" : "MAP, low-dimensional";
    row.trunc_dim = run_cfg.trunc_dim;
    row.repeats = options.repeats;
    row.iterations = iterations;
    row.median_seconds = median(seconds);
    row.peak_rss_mb = rss;
    std::ostringstream note;
    note << "alpha " << options.alpha << ", early stop disabled";
    row.note = note.str();
    rows.push_back(row);
  }

  if (options.predictions && options.predictions->sidecar)
  {
    const auto & sidecar = *options.predictions->sidecar;
    BenchRow     row;
    row.stage = "Prediction (sidecar)";
    row.repeats = 1;
    row.median_seconds = sidecar.seconds_per_pair.value_or(std::nan(""));
    row.peak_rss_mb = sidecar.peak_rss_mb.value_or(std::nan(""));
    row.note = sidecar.model_hash.empty() ? "from predictions sidecar" : "model " + sidecar.model_hash;
    rows.push_back(row);
  }
  return rows;
}

std::string
bench_markdown(const std::vector<BenchRow> & rows)
{
  std::ostringstream out;
  out << "| Stage | Truncation | Iterations | Repeats | Runtime (s, median) | Peak RSS (MiB) | Note |\n";
  out << "|---|---|---|---|---|---|---|\n";
  out << std::fixed;
  for (const auto & r : rows)
    out << "| " << r.stage << " | " << (r.trunc_dim > 0 ? std::to_string(r.trunc_dim) : "-") << " | " << r.iterations
        << " | " << r.repeats << " | " << std::setprecision(3) << r.median_seconds << " | " << std::setprecision(1)
        << r.peak_rss_mb << " | " << r.note << " |\n";
  return out.str();
}

std::string
bench_csv(const std::vector<BenchRow> & rows)
{
  std::ostringstream out;
  out << "stage,trunc_dim,iterations,repeats,median_seconds,peak_rss_mb,note\n" << std::setprecision(10);
  for (const auto & r : rows)
    out << '"' << r.stage << "\"," << r.trunc_dim << ',' << r.iterations << ',' << r.repeats << ',' << r.median_seconds
        << ',' << r.peak_rss_mb << ",\"" << r.note << "\"\n";
  return out.str();
}

} // namespace flowreg

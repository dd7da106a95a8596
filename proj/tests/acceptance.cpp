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
// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "flowreg/posterior.hpp"
#include "flowreg/shooting.hpp"
#include "flowreg/synth.hpp"
#include "support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <vector>

using namespace flowreg;
using namespace flowreg::testing;

namespace
{

using Clock = std::chrono::steady_clock;

double
seconds_since(Clock::time_point start)
{
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void
report(const char * name, bool pass, const std::string & detail)
{
  std::printf("%s  %-28s %s\n", pass ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  if (!pass)
    ++failures;
}

std::string
fmt(const char * format, auto... args)
{
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double
median_of(std::vector<double> v)
{
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double
relative(double a, double b)
{
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

// ---------------------------------------------------------------------------

void
gradient_correctness()
{
  const auto   start = Clock::now();
  const int    instances = 20;
  const auto   trunc = std::vector<int>{ 16, 16 };
  const auto   grid = std::vector<int>{ 32, 32 };
  double       worst_alpha = 0.0, worst_v0 = 0.0;
  std::size_t  coefficients = 0;
  std::mt19937_64 rng(20);
  std::uniform_real_distribution<double> alpha_dist(2.0, 11.0);

  for (int i = 0; i < instances; ++i)
  {
    PosteriorConfig cfg;
    cfg.trunc_dim = 16;
    cfg.sigma = 0.05;
    const double           alpha = alpha_dist(rng);
    const SpectralOperator op(trunc, grid, alpha, cfg.power);
    const auto             source = smooth_image(grid, 1000 + i, 10);
    const auto             target =
      warp_image(source, shoot(sample_prior(alpha, op, 2000 + i), op, cfg.integrator()).displacement());
    auto v0 = sample_prior(alpha, op, 3000 + i);
    v0 *= 0.5;

    // alpha: central differences of the energy with the shot deformation fixed
    const auto deformed = warp_image(source, shoot(v0, op, cfg.integrator()).displacement());
    const auto energy_at = [&](double a) {
      return posterior_terms(v0, deformed, target, op.with_alpha(a), cfg).total();
    };
    const double h_alpha = 1e-4 * alpha;
    const double fd_alpha = (energy_at(alpha + h_alpha) - energy_at(alpha - h_alpha)) / (2 * h_alpha);
    worst_alpha = std::max(worst_alpha, relative(grad_alpha(v0, alpha, op), fd_alpha));

    // v0: every real degree of freedom of the truncated field, with
    // E(v0 + h e) - E(v0 - h e) formed term by term without cancellation
    const auto g = apply_smoothing(op, grad_v0_total(v0, source, target, alpha, cfg), Smoothing::L);
    const auto & box = op.box();
    const double h = 1e-7;
    const auto   deform = [&](const BandlimitedField & v) {
      return warp_image(source, shoot(v, op, cfg.integrator()).displacement());
    };
    for (int c = 0; c < 2; ++c)
      for (std::size_t k = 0; k < box.size(); ++k)
      {
        if (!box.retained(k) || box.mirror(k) < k)
          continue;
        for (bool imaginary : { false, true })
        {
          const auto e = coefficient_direction(v0, c, k, imaginary);
          if (e.squared_norm() == 0.0)
            continue;
          auto plus = v0, minus = v0;
          plus.axpy(h, e);
          minus.axpy(-h, e);
          const auto sp = deform(plus);
          const auto sm = deform(minus);
          double     data = 0.0;
          for (std::size_t p = 0; p < sp.size(); ++p)
            data += (sp[p] - sm[p]) * (sp[p] + sm[p] - 2.0 * target[p]);
          const double diff = data / (2.0 * cfg.sigma * cfg.sigma) +
                              0.5 * apply_smoothing(op, plus - minus, Smoothing::L).dot(plus + minus);
          worst_v0 = std::max(worst_v0, relative(g.dot(e), diff / (2 * h)));
          ++coefficients;
        }
      }
  }
  const double elapsed = seconds_since(start);
  report("gradient correctness",
         worst_alpha < 1e-6 && worst_v0 < 1e-4 && elapsed < 120.0,
         fmt("%d instances, 16^2 truncation, %zu coefficient checks: max rel err alpha %.2e (< 1e-6), v0 %.2e "
             "(< 1e-4); %.1f s (< 120 s)",
             instances,
             coefficients,
             worst_alpha,
             worst_v0,
             elapsed));
}

// ---------------------------------------------------------------------------

void
enumerate_grids(int rank, std::vector<int> & dims, const auto & visit)
{
  if (static_cast<int>(dims.size()) == rank)
  {
    visit(dims);
    return;
  }
  for (int n = 2; n <= 6; ++n)
  {
    dims.push_back(n);
    enumerate_grids(rank, dims, visit);
    dims.pop_back();
  }
}

void
spectral_oracles()
{
  const auto  start = Clock::now();
  double      worst = 0.0;
  std::size_t cases = 0;
  std::uint64_t seed = 1;
  for (int rank = 1; rank <= 3; ++rank)
  {
    std::vector<int> dims;
    enumerate_grids(rank, dims, [&](const std::vector<int> & grid) {
      std::vector<int> half;
      for (int n : grid)
        half.push_back(std::max(2, (n + 1) / 2));
      for (const auto & trunc : { grid, half })
      {
        const SpectralOperator op(trunc, grid, 1.7, 3);
        const auto             a = random_field(trunc, grid, seed++, false, 1);
        const auto             b = random_field(trunc, grid, seed++, false, 1);
        for (auto mode : { ProductMode::Convolve, ProductMode::Correlate })
        {
          const auto fast = truncated_convolution(a.box(), a.coefficients(), b.coefficients(), mode);
          const auto slow = brute_product(a.box(), a.coefficients(), b.coefficients(), mode);
          worst = std::max(worst, max_abs_diff(fast, slow));
        }
        const auto v = random_field(trunc, grid, seed++);
        const auto w = random_field(trunc, grid, seed++);
        worst = std::max(worst, max_abs_diff(ad_bracket(v, w, op).coefficients(), oracle_ad_bracket(v, w).coefficients()));
        worst = std::max(worst,
                         max_abs_diff(ad_dagger(v, w, op).coefficients(), oracle_ad_dagger(v, w, 1.7, 3).coefficients()));
        ++cases;
      }
    });
  }
  const double elapsed = seconds_since(start);
  report("spectral oracle equivalence",
         worst < 1e-10 && elapsed < 60.0,
         fmt("%zu boxes over all 1-3D grids with 2..6 points per axis: max abs err %.2e (< 1e-10); %.1f s (< 60 s)",
             cases,
             worst,
             elapsed));
}

// ---------------------------------------------------------------------------

struct RecoveryRun
{
  double true_alpha;
  double alpha;
  bool   converged;
  bool   monotone;
  double min_det;
};

std::vector<RecoveryRun>
alpha_recovery()
{
  const auto               start = Clock::now();
  const PosteriorConfig    cfg;
  const BullEyeSpec        spec;
  std::vector<RecoveryRun> runs;
  std::string              detail;
  bool                     pass = true;
  for (double truth : { 3.0, 6.0, 11.0 })
  {
    std::vector<double> rel, estimates;
    for (int i = 0; i < 10; ++i)
    {
      const auto pair = synthesize_pair(spec, truth, derive_seed(7, "recovery", static_cast<std::uint64_t>(truth * 100 + i)), cfg);
      const auto map = map_estimate(pair.source, pair.target, cfg);
      RecoveryRun run{ truth, map.alpha_opt, map.converged, true, 0.0 };
      for (std::size_t k = 1; k < map.energy_trace.size(); ++k)
        run.monotone = run.monotone && map.energy_trace[k] <= map.energy_trace[k - 1];
      const SpectralOperator op(map.v0.trunc_dims(), map.v0.grid_dims(), map.alpha_opt, cfg.power);
      const auto             det = jacobian_determinant_map(shoot(map.v0, op, cfg.integrator()).displacement());
      run.min_det = *std::min_element(det.values().begin(), det.values().end());
      runs.push_back(run);
      rel.push_back(std::abs(map.alpha_opt - truth) / truth);
      estimates.push_back(map.alpha_opt);
    }
    const double med = median_of(rel);
    pass = pass && med <= 0.2;
    detail += fmt("alpha %g: median estimate %.2f, median rel err %.2f; ", truth, median_of(estimates), med);
  }
  const bool   monotone = std::all_of(runs.begin(), runs.end(), [](const RecoveryRun & r) { return r.monotone; });
  const auto   converged = std::count_if(runs.begin(), runs.end(), [](const RecoveryRun & r) { return r.converged; });
  const double elapsed = seconds_since(start);
  report("alpha recovery",
         pass && monotone && elapsed < 900.0,
         detail + fmt("(<= 0.20); energy traces non-increasing: %s; %ld/30 converged; %.0f s (< 900 s)",
                      monotone ? "yes" : "no",
                      static_cast<long>(converged),
                      elapsed));
  return runs;
}

void
diffeomorphism(const std::vector<RecoveryRun> & runs)
{
  // gated on every registration, converged or not
  double worst = std::numeric_limits<double>::infinity();
  for (const auto & r : runs)
    worst = std::min(worst, r.min_det);
  report("diffeomorphism",
         !runs.empty() && worst > 0.05,
         fmt("%zu registrations from the recovery suite: min Jacobian determinant %.3f (> 0.05)", runs.size(), worst));
}

// ---------------------------------------------------------------------------

double
metric_energy(const SpectralOperator & op, const BandlimitedField & v)
{
  return apply_smoothing(op, v, Smoothing::L).dot(v);
}

void
epdiff_convergence()
{
  const std::vector<int> steps{ 10, 20, 50, 100 };
  double                 worst10 = 0.0, worst_slope_dev = 0.0;
  bool                   decreasing = true;
  std::string            slopes;
  for (std::uint64_t seed = 1; seed <= 5; ++seed)
  {
    const SpectralOperator op({ 8, 8 }, { 8, 8 }, 3.0);
    auto                   v0 = sample_prior(3.0, op, seed);
    v0 *= 0.3;
    const double        e0 = metric_energy(op, v0);
    std::vector<double> drift;
    for (int n : steps)
    {
      const auto path = integrate_epdiff(v0, op, IntegratorConfig{ n });
      drift.push_back(std::abs(metric_energy(op, path.velocities.back()) - e0) / e0);
    }
    worst10 = std::max(worst10, drift.front());
    for (std::size_t i = 1; i < drift.size(); ++i)
      decreasing = decreasing && drift[i] < drift[i - 1];
    // least-squares slope of log drift against log n
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < steps.size(); ++i)
    {
      mx += std::log(steps[i]) / steps.size();
      my += std::log(drift[i]) / steps.size();
    }
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < steps.size(); ++i)
    {
      sxy += (std::log(steps[i]) - mx) * (std::log(drift[i]) - my);
      sxx += (std::log(steps[i]) - mx) * (std::log(steps[i]) - mx);
    }
    const double slope = sxy / sxx;
    worst_slope_dev = std::max(worst_slope_dev, std::abs(slope + 1.0));
    slopes += fmt("%s%.2f", slopes.empty() ? "" : ", ", slope);
  }
  report("EPDiff integrator",
         worst10 < 5e-2 && decreasing && worst_slope_dev < 0.25,
         fmt("5 random fields, 8^2 grid: max drift at n=10 %.2e (< 5e-2); drift decreasing over n=10..100: %s; "
             "log-log slopes %s (-1 +- 0.25)",
             worst10,
             decreasing ? "yes" : "no",
             slopes.c_str()));
}

// ---------------------------------------------------------------------------

void
prior_moments()
{
  const int draws = 10000;
  double    worst = 0.0;
  for (double alpha : { 3.0, 6.0, 11.0 })
  {
    const SpectralOperator op({ 16, 16 }, { 100, 100 }, alpha, 3);
    const auto &           box = op.box();
    std::vector<double>    second(2 * box.size(), 0.0);
    for (int s = 0; s < draws; ++s)
    {
      const auto v = sample_prior(alpha, op, derive_seed(99, "prior", s));
      for (int c = 0; c < 2; ++c)
        for (std::size_t k = 0; k < box.size(); ++k)
          second[c * box.size() + k] += std::norm(v.component(c)[k]) / draws;
    }
    const auto lap = op.laplacian();
    for (int c = 0; c < 2; ++c)
      for (std::size_t k = 0; k < box.size(); ++k)
        if (box.retained(k))
          worst = std::max(worst, std::abs(second[c * box.size() + k] * std::pow(alpha * lap[k] + 1.0, 3) - 1.0));
  }
  report("prior sampler moments",
         worst < 0.05,
         fmt("1e4 draws at alpha 3, 6, 11, 16^2 truncation: max rel deviation of per-frequency variance %.3f (< 0.05)",
             worst));
}

// ---------------------------------------------------------------------------

// Area of the intersection of an ellipse with its copy shifted by d along x.
double
ellipse_lens(double a, double b, double d)
{
  // scale x by b / a: circles of radius b at distance d b / a
  const double r = b, s = d * b / a;
  const double circle = 2 * r * r * std::acos(s / (2 * r)) - 0.5 * s * std::sqrt(4 * r * r - s * s);
  return circle * a / b;
}

void
dice_plumbing()
{
  const BullEyeSpec spec;
  const auto        labels = synthesize_labels(spec);
  const auto        grid = labels.dims;

  bool        identity = true;
  const auto  same = warp_labels(labels, VectorImage(grid, 2));
  for (int l : { kBackground, kRing, kDisk })
    identity = identity && dice(labels, same, l) == 1.0;

  const double pi = std::numbers::pi;
  const double outer = pi * spec.outer_a * spec.outer_b, inner = pi * spec.inner_a * spec.inner_b;
  const double total = static_cast<double>(grid[0]) * grid[1];
  double       worst = 0.0;
  std::string  values;
  for (int axis = 0; axis < 2; ++axis)
  {
    // one voxel along x (axis 1 of the field) or y (axis 0)
    VectorImage u(grid, 2);
    std::fill(u.components[1 - axis].begin(), u.components[1 - axis].end(), -1.0);
    const auto   moved = warp_labels(labels, u);
    const double oa = axis == 0 ? spec.outer_a : spec.outer_b, ob = axis == 0 ? spec.outer_b : spec.outer_a;
    const double ia = axis == 0 ? spec.inner_a : spec.inner_b, ib = axis == 0 ? spec.inner_b : spec.inner_a;
    const double oo = ellipse_lens(oa, ob, 1.0), ii = ellipse_lens(ia, ib, 1.0);
    const double analytic[3] = { (total - (2 * outer - oo)) / (total - outer),
                                 (oo - 2 * inner + ii) / (outer - inner),
                                 ii / inner };
    for (int l : { kBackground, kRing, kDisk })
    {
      const double measured = dice(labels, moved, l);
      worst = std::max(worst, std::abs(measured - analytic[l]) / analytic[l]);
      values += fmt("%s%.4f/%.4f", values.empty() ? "" : ", ", measured, analytic[l]);
    }
  }
  report("dice plumbing",
         identity && worst < 0.02,
         fmt("identity dice exactly 1: %s; one-voxel x/y shift, measured/analytic per label: %s; max rel err %.4f "
             "(< 0.02)",
             identity ? "yes" : "no",
             values.c_str(),
             worst));
}

// ---------------------------------------------------------------------------

void
performance_ordering()
{
  const BullEyeSpec spec;
  PosteriorConfig   cfg;
  const auto        pair = synthesize_pair(spec, 6.0, 5, cfg);
  const int         iterations = 20;
  cfg.max_iters = iterations;
  cfg.q_min = iterations + 1;

  const auto time_at = [&](int trunc) {
    cfg.trunc_dim = trunc;
    std::vector<double> times;
    for (int r = 0; r < 3; ++r)
    {
      const auto start = Clock::now();
      const auto map = map_estimate(pair.source, pair.target, cfg);
      times.push_back(seconds_since(start));
      (void)map;
    }
    return median_of(times);
  };
  const double low = time_at(16);
  const double full = time_at(100);
  report("performance ordering",
         full >= 3.0 * low,
         fmt("%d MAP iterations, median of 3: truncation 16 %.3f s, full 100^2 %.3f s, speed-up %.1fx (>= 3x)",
             iterations,
             low,
             full,
             full / low));
}

} // namespace

int
main()
{
  gradient_correctness();
  spectral_oracles();
  const auto runs = alpha_recovery();
  epdiff_convergence();
  diffeomorphism(runs);
  prior_moments();
  dice_plumbing();
  performance_ordering();
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

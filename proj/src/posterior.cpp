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
#include "flowreg/posterior.hpp"

#include "flowreg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <random>

namespace flowreg
{

void
PosteriorConfig::validate() const
{
  if (!(sigma > 0.0))
    throw std::invalid_argument("sigma must be positive");
  if (!(alpha_init > 0.0))
    throw std::invalid_argument("alpha_init must be positive");
  if (!(eps > 0.0) || !(tau > 0.0))
    throw std::invalid_argument("step sizes eps and tau must be positive");
  if (max_iters < 1)
    throw std::invalid_argument("max_iters must be at least 1");
  if (n_steps < 1)
    throw std::invalid_argument("n_steps must be at least 1");
  if (trunc_dim < 2)
    throw std::invalid_argument("trunc_dim must be at least 2");
  if (q_min < 1)
    throw std::invalid_argument("q_min must be at least 1");
  if (power < 1)
    throw std::invalid_argument("power must be at least 1");
  if (max_halvings < 0)
    throw std::invalid_argument("max_halvings must be non-negative");
  if (!(step_growth >= 1.0))
    throw std::invalid_argument("step_growth must be at least 1");
}

std::vector<int>
truncation_for(const PosteriorConfig & cfg, const std::vector<int> & grid_dims)
{
  std::vector<int> trunc;
  for (int n : grid_dims)
    trunc.push_back(std::min(cfg.trunc_dim, n));
  return trunc;
}

double
log_determinant(const SpectralOperator & op)
{
  const auto & box = op.box();
  const auto   lap = op.laplacian();
  double       acc = 0.0;
  for (std::size_t k = 0; k < box.size(); ++k)
    if (box.retained(k))
      acc += std::log1p(op.alpha() * lap[k]);
  return static_cast<double>(op.power()) * op.rank() * acc;
}

EnergyTerms
posterior_terms(const BandlimitedField & v0,
                const SpatialImage &     deformed,
                const SpatialImage &     target,
                const SpectralOperator & op,
                const PosteriorConfig &  cfg)
{
  if (deformed.dims() != target.dims())
    throw ShapeError("posterior_terms: deformed and target images differ in size");
  EnergyTerms terms;
  terms.regularity = 0.5 * apply_smoothing(op, v0, Smoothing::L).dot(v0);
  double ssd = 0.0;
  for (std::size_t p = 0; p < target.size(); ++p)
    ssd += (deformed[p] - target[p]) * (deformed[p] - target[p]);
  terms.data = ssd / (2.0 * cfg.sigma * cfg.sigma);
  terms.log_det = -0.5 * log_determinant(op);
  const double m = static_cast<double>(target.size());
  terms.constant = 2.0 * m * std::log(cfg.sigma) + m * std::log(2.0 * std::numbers::pi);
  return terms;
}

EnergyTerms
evaluate_posterior(const BandlimitedField & v0,
                   const SpatialImage &     source,
                   const SpatialImage &     target,
                   double                   alpha,
                   const PosteriorConfig &  cfg)
{
  if (source.dims() != target.dims())
    throw ShapeError("evaluate_posterior: source and target differ in size");
  const SpectralOperator op(v0.trunc_dims(), v0.grid_dims(), alpha, cfg.power);
  const auto             path = shoot(v0, op, cfg.integrator());
  const auto             deformed = warp_image(source, path.displacement());
  return posterior_terms(v0, deformed, target, op, cfg);
}

double
log_posterior(const BandlimitedField & v0,
              const SpatialImage &     source,
              const SpatialImage &     target,
              double                   alpha,
              const PosteriorConfig &  cfg)
{
  return evaluate_posterior(v0, source, target, alpha, cfg).total();
}

double
grad_alpha(const BandlimitedField & v0, double alpha, const SpectralOperator & op)
{
  if (!op.matches(v0))
    throw ShapeError("grad_alpha: field does not live on the operator grid");
  const auto & box = op.box();
  const auto   lap = op.laplacian();
  const int    p = op.power();

  double quadratic = 0.0;
  for (int c = 0; c < v0.components(); ++c)
  {
    const auto coeffs = v0.component(c);
    for (std::size_t k = 0; k < box.size(); ++k)
      quadratic += std::pow(alpha * lap[k] + 1.0, p - 1) * lap[k] * std::norm(coeffs[k]);
  }
  double trace = 0.0;
  for (std::size_t k = 0; k < box.size(); ++k)
    if (box.retained(k))
      trace += lap[k] / (alpha * lap[k] + 1.0);
  trace *= v0.components();

  return 0.5 * p * (quadratic - trace);
}

BandlimitedField
grad_v1(const SpatialImage &     source,
        const SpatialImage &     target,
        const GeodesicPath &     path,
        const SpectralOperator & op,
        const PosteriorConfig &  cfg)
{
  if (source.dims() != target.dims() || source.dims() != op.grid_dims())
    throw ShapeError("grad_v1: image and operator grids differ");
  if (path.displacements.empty())
    throw std::invalid_argument("grad_v1: path has not been transported");

  const auto   sample = warp_with_gradient(source, to_spatial(path.displacement()));
  const double gamma = cfg.gamma();
  VectorImage  force(source.dims(), source.rank());
  for (std::size_t p = 0; p < source.size(); ++p)
  {
    const double residual = gamma * (sample.image[p] - target[p]);
    for (int a = 0; a < source.rank(); ++a)
      force.components[a][p] = residual * sample.source_gradient.components[a][p];
  }

  // Euclidean gradient with respect to the coefficients of u(1).
  auto grad_u = to_bandlimited(force, op.trunc_dims());
  grad_u *= static_cast<double>(source.size());
  auto out = apply_smoothing(op, grad_u, Smoothing::K);
  out *= -1.0;
  return out;
}

AdjointState
backward_adjoint_sweep(const GeodesicPath &     path,
                       const BandlimitedField & grad_at_t1,
                       const SpectralOperator & op,
                       const PosteriorConfig &  cfg)
{
  (void)cfg;
  if (path.displacements.size() != path.velocities.size())
    throw std::invalid_argument("backward_adjoint_sweep: path has not been transported");
  if (!op.matches(grad_at_t1))
    throw ShapeError("backward_adjoint_sweep: gradient does not live on the operator grid");

  const double dt = path.time_step();
  AdjointState state{ grad_at_t1, grad_at_t1.zeros_like() };

  for (int k = path.n_steps() - 1; k >= 0; --k)
  {
    const auto & v = path.velocities[k];
    const auto & u = path.displacements[k];
    const auto   momentum = apply_smoothing(op, state.v_hat, Smoothing::L);

    // velocity adjoint: transpose of the EPDiff step plus the transport source
    auto source = momentum;
    source += jacobian_action_transpose_v(u, momentum, op);
    auto h_next = state.h_hat;
    h_next.axpy(-dt, ad_bracket(v, state.h_hat, op));
    h_next.axpy(-dt, ad_dagger(state.h_hat, v, op));
    h_next.axpy(dt, apply_smoothing(op, source, Smoothing::K));

    // displacement adjoint: transpose of the advection term
    auto v_next = state.v_hat;
    v_next.axpy(-dt, apply_smoothing(op, jacobian_action_transpose_u(v, momentum, op), Smoothing::K));

    if (!h_next.all_finite() || !v_next.all_finite())
      throw NumericalError("adjoint sweep produced non-finite coefficients at step " + std::to_string(k), k);
    state.h_hat = std::move(h_next);
    state.v_hat = std::move(v_next);
  }
  return state;
}

BandlimitedField
grad_v0_total(const BandlimitedField & v0,
              const SpatialImage &     source,
              const SpatialImage &     target,
              double                   alpha,
              const PosteriorConfig &  cfg)
{
  const SpectralOperator op(v0.trunc_dims(), v0.grid_dims(), alpha, cfg.power);
  const auto             path = shoot(v0, op, cfg.integrator());
  const auto             at_t1 = grad_v1(source, target, path, op, cfg);
  auto                   gradient = backward_adjoint_sweep(path, at_t1, op, cfg).h_hat;
  gradient += v0;
  return gradient;
}

// ---------------------------------------------------------------------------
// MAP descent

namespace
{

struct Trial
{
  bool             ok = false;
  double           alpha = 0.0;
  BandlimitedField v0;
  double           energy = 0.0;
  double           grad_v0_sq = 0.0;
  bool             v0_stationary = false;
};

} // namespace

MapResult
map_estimate(const SpatialImage & source, const SpatialImage & target, const PosteriorConfig & cfg, const MapOptions & options)
{
  cfg.validate();
  if (source.dims() != target.dims())
    throw ShapeError("map_estimate: source and target differ in size");

  const auto trunc = truncation_for(cfg, source.dims());
  double     alpha = options.estimate_alpha ? cfg.alpha_init : options.fixed_alpha.value_or(cfg.alpha_init);
  if (!(alpha > 0.0))
    throw std::invalid_argument("map_estimate: alpha must be positive");

  BandlimitedField v0 = options.initial_v0.value_or(BandlimitedField(trunc, source.dims()));
  if (v0.trunc_dims() != trunc || v0.grid_dims() != source.dims())
    throw ShapeError("map_estimate: initial velocity does not match the configured truncation");

  const auto energy_at = [&](const BandlimitedField & v, double a) {
    return log_posterior(v, source, target, a, cfg);
  };

  MapResult result;
  double    objective = energy_at(v0, alpha);
  result.energy_trace.push_back(objective);
  result.alpha_trace.push_back(alpha);

  bool   alpha_frozen = !options.estimate_alpha;
  double eps = cfg.eps;
  double tau = cfg.tau;
  int    q = 0;

  for (int iter = 1; iter <= cfg.max_iters; ++iter)
  {
    double g_alpha = 0.0;
    if (!alpha_frozen)
    {
      const SpectralOperator op(trunc, source.dims(), alpha, cfg.power);
      g_alpha = grad_alpha(v0, alpha, op);
      if (g_alpha * g_alpha <= cfg.grad_threshold)
        alpha_frozen = true;
    }

    Trial  trial;
    double gradient_alpha = std::nan("");
    std::optional<BandlimitedField> gradient;
    for (int attempt = 0; attempt <= cfg.max_halvings && !trial.ok; ++attempt)
    {
      double a_try = alpha;
      if (!alpha_frozen)
      {
        a_try = alpha - tau * g_alpha;
        if (a_try < cfg.alpha_floor)
        {
          std::clog << "warning: alpha update projected to floor " << cfg.alpha_floor << '\n';
          a_try = cfg.alpha_floor;
        }
      }
      try
      {
        if (!gradient || gradient_alpha != a_try)
        {
          gradient = grad_v0_total(v0, source, target, a_try, cfg);
          gradient_alpha = a_try;
        }
        trial.grad_v0_sq = gradient->squared_norm();
        trial.v0_stationary = trial.grad_v0_sq <= cfg.grad_threshold;
        trial.v0 = v0;
        if (!trial.v0_stationary)
          trial.v0.axpy(-eps, *gradient);
        if (alpha_frozen && trial.v0_stationary)
        {
          trial.alpha = a_try;
          trial.energy = objective;
          trial.ok = true;
          break;
        }
        trial.alpha = a_try;
        trial.energy = energy_at(trial.v0, a_try);
        trial.ok = std::isfinite(trial.energy) && trial.energy <= objective;
      }
      catch (const NumericalError &)
      {
        trial.ok = false;
      }
      if (!trial.ok)
      {
        ++result.rejected_steps;
        eps *= 0.5;
        tau *= 0.5;
      }
    }

    if (!trial.ok)
    {
      result.stop_reason = "no decrease after step-size halving";
      break;
    }
    if (alpha_frozen && trial.v0_stationary)
    {
      result.converged = true;
      result.stop_reason = "gradients below threshold";
      break;
    }

    const double rate = (objective - trial.energy) / std::abs(trial.energy);
    objective = trial.energy;
    v0 = std::move(trial.v0);
    alpha = trial.alpha;
    result.iterations_run = iter;
    result.energy_trace.push_back(objective);
    result.alpha_trace.push_back(alpha);
    result.grad_alpha_trace.push_back(g_alpha);
    result.grad_v0_trace.push_back(trial.grad_v0_sq);
    if (options.on_iteration)
      options.on_iteration(iter, objective, alpha);

    if (rate < cfg.stop_rate)
      ++q;
    if (q >= cfg.q_min)
    {
      result.converged = true;
      result.stop_reason = "relative energy change below stop rate";
      break;
    }
    eps *= cfg.step_growth;
    tau *= cfg.step_growth;
  }
  if (result.stop_reason.empty())
    result.stop_reason = "iteration limit reached";

  result.alpha_opt = alpha;
  result.v0 = std::move(v0);
  return result;
}

BandlimitedField
sample_prior(double alpha, const SpectralOperator & op, std::uint64_t seed)
{
  if (!(alpha > 0.0))
    throw std::invalid_argument("sample_prior: alpha must be positive");
  std::mt19937_64                  rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto &                     box = op.box();
  const auto                       lap = op.laplacian();
  BandlimitedField                 out = op.zero_field();
  for (int c = 0; c < out.components(); ++c)
  {
    auto coeffs = out.component(c);
    for (std::size_t k = 0; k < box.size(); ++k)
    {
      if (!box.retained(k))
        continue;
      const std::size_t m = box.mirror(k);
      if (m < k)
        continue;
      const double scale = std::pow(alpha * lap[k] + 1.0, -0.5 * op.power());
      if (m == k)
      {
        coeffs[k] = Complex(normal(rng) * scale, 0.0);
      }
      else
      {
        const double re = normal(rng);
        const double im = normal(rng);
        coeffs[k] = Complex(re, im) * (scale / std::numbers::sqrt2);
        coeffs[m] = std::conj(coeffs[k]);
      }
    }
  }
  return out;
}

} // namespace flowreg

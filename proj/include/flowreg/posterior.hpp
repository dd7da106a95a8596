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

// Low-dimensional Bayesian registration: the negative log posterior over the
// bandlimited initial velocity and the regularity parameter alpha, its
// gradients, prior sampling and the alternating MAP descent.
//
// Gradients with respect to v0 are Sobolev gradients: the returned field g
// satisfies dE = <L g, dv0> for every real (Hermitian) perturbation dv0.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "flowreg/image.hpp"
#include "flowreg/shooting.hpp"
#include "flowreg/spectral.hpp"

namespace flowreg
{

struct PosteriorConfig
{
  double sigma = 0.03;        // image noise std, intensity units
  double alpha_init = 1.0;
  double eps = 2e-5;          // v0 step size
  double tau = 1e-2;          // alpha step size
  int    max_iters = 500;     // r
  double stop_rate = 1e-6;    // u
  int    q_min = 30;
  int    n_steps = 10;
  int    trunc_dim = 16;      // per axis
  int    power = 3;           // exponent of (alpha A + 1)
  int    max_halvings = 10;
  double step_growth = 1.0;   // eps multiplier after an accepted step (1 = fixed step)
  double grad_threshold = 1e-6;
  double alpha_floor = 1e-6;

  // Weight of the squared-distance term, identified with 1 / sigma^2.
  double
  gamma() const noexcept
  {
    return 1.0 / (sigma * sigma);
  }

  // Throws std::invalid_argument on an inconsistent configuration.
  void
  validate() const;

  IntegratorConfig
  integrator() const
  {
    return IntegratorConfig{ n_steps };
  }
};

/// Truncation box for an image grid, trunc_dim per axis (never larger than the grid).
std::vector<int>
truncation_for(const PosteriorConfig & cfg, const std::vector<int> & grid_dims);

/// Adjoint Jacobi fields of the backward sweep, both in the Sobolev metric:
/// v_hat is the displacement adjoint, h_hat the velocity adjoint.
struct AdjointState
{
  BandlimitedField v_hat;
  BandlimitedField h_hat;
};

/// The individual terms of the negative log posterior.
struct EnergyTerms
{
  double regularity = 0.0; // (L v0, v0) / 2
  double data = 0.0;       // ||S o phi^-1 - T||^2 / (2 sigma^2)
  double log_det = 0.0;    // -ln|L| / 2
  double constant = 0.0;   // 2 M ln sigma + M ln 2 pi

  double
  total() const noexcept
  {
    return regularity + data + log_det + constant;
  }
};

/// ln|L| over all retained coefficients of a rank-component field.
double
log_determinant(const SpectralOperator & op);

/// Energy terms given an already deformed source.
EnergyTerms
posterior_terms(const BandlimitedField & v0,
                const SpatialImage &     deformed,
                const SpatialImage &     target,
                const SpectralOperator & op,
                const PosteriorConfig &  cfg);

/// Shoots v0 at regularity alpha and evaluates the negative log posterior.
EnergyTerms
evaluate_posterior(const BandlimitedField & v0,
                   const SpatialImage &     source,
                   const SpatialImage &     target,
                   double                   alpha,
                   const PosteriorConfig &  cfg);

double
log_posterior(const BandlimitedField & v0,
              const SpatialImage &     source,
              const SpatialImage &     target,
              double                   alpha,
              const PosteriorConfig &  cfg);

/// d/dalpha of the alpha-dependent prior terms; the likelihood is taken as
/// independent of alpha once the deformation has been shot. Only the
/// Laplacian symbol and power of op are used.
double
grad_alpha(const BandlimitedField & v0, double alpha, const SpectralOperator & op);

/// Gradient at t = 1 with respect to the final velocity:
/// -K[ M P( (S o phi^-1 - T) grad S(phi^-1) / sigma^2 ) ], where grad S is the
/// exact gradient of the multilinear interpolant and P the low-pass projection.
/// The sign reflects phi^-1 being transported by -v. Requires a transported path.
BandlimitedField
grad_v1(const SpatialImage &     source,
        const SpatialImage &     target,
        const GeodesicPath &     path,
        const SpectralOperator & op,
        const PosteriorConfig &  cfg);

/// Integrates the adjoint system backward from t = 1 (v_hat = grad_v1,
/// h_hat = 0) to t = 0 and returns the final state; h_hat(0) is the data
/// contribution to the v0 gradient. Each step is the exact transpose of the
/// forward Euler steps of integrate_epdiff and transport_trajectory.
AdjointState
backward_adjoint_sweep(const GeodesicPath &     path,
                       const BandlimitedField & grad_at_t1,
                       const SpectralOperator & op,
                       const PosteriorConfig &  cfg);

/// v0 + h_hat(0): the Sobolev gradient of the negative log posterior.
BandlimitedField
grad_v0_total(const BandlimitedField & v0,
              const SpatialImage &     source,
              const SpatialImage &     target,
              double                   alpha,
              const PosteriorConfig &  cfg);

struct MapOptions
{
  bool                            estimate_alpha = true;
  std::optional<double>           fixed_alpha;   // used when estimate_alpha is false
  std::optional<BandlimitedField> initial_v0;
  // Called after every accepted iteration with (iteration, energy, alpha).
  std::function<void(int, double, double)> on_iteration;
};

struct MapResult
{
  double              alpha_opt = 0.0;
  BandlimitedField    v0;
  std::vector<double> energy_trace;  // entry 0 is the initial energy
  std::vector<double> alpha_trace;
  std::vector<double> grad_alpha_trace;
  std::vector<double> grad_v0_trace; // squared norms
  int                 iterations_run = 0;
  int                 rejected_steps = 0;
  bool                converged = false;
  std::string         stop_reason;
};

/// Alternating gradient descent on (alpha, v0). Each iteration: alpha step
/// (frozen once its squared gradient drops below the threshold), shoot,
/// adjoint sweep, v0 step, energy. Steps that raise the energy or blow up are
/// retried with halved step sizes. Non-convergence is reported, not thrown.
MapResult
map_estimate(const SpatialImage &    source,
             const SpatialImage &    target,
             const PosteriorConfig & cfg,
             const MapOptions &      options = {});

/// Draw v0 ~ N(0, L^-1): each retained Hermitian pair gets a complex Gaussian
/// with E|c|^2 = 1 / L(k); the zero frequency is real. Deterministic per seed.
BandlimitedField
sample_prior(double alpha, const SpectralOperator & op, std::uint64_t seed);

} // namespace flowreg

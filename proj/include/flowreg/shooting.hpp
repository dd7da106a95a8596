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

#include <vector>

#include "flowreg/image.hpp"
#include "flowreg/spectral.hpp"

namespace flowreg
{

/// Forward Euler on uniform nodes t_k = k / n_steps.
struct IntegratorConfig
{
  int n_steps = 10;
};

/// Velocities v_0..v_n of a geodesic and, once transported, the inverse-map
/// displacements u_0..u_n (phi^-1_t = id + u_t, u_0 = 0).
struct GeodesicPath
{
  std::vector<BandlimitedField> velocities;
  std::vector<BandlimitedField> displacements;

  int
  n_steps() const noexcept
  {
    return static_cast<int>(velocities.size()) - 1;
  }
  double
  time_step() const noexcept
  {
    return 1.0 / n_steps();
  }
  // u at t = 1; requires a transported path.
  const BandlimitedField &
  displacement() const
  {
    return displacements.back();
  }
};

/// v_{k+1} = v_k + dt ad^dagger_{v_k} v_k. Throws NumericalError carrying the
/// step index when a coefficient stops being finite.
GeodesicPath
integrate_epdiff(const BandlimitedField & v0, const SpectralOperator & op, const IntegratorConfig & cfg);

/// Euler steps of du/dt = -v - (Du) v from u = 0, using the left-node velocity.
std::vector<BandlimitedField>
transport_trajectory(const GeodesicPath & path, const SpectralOperator & op);

BandlimitedField
transport_inverse_map(const GeodesicPath & path, const SpectralOperator & op);

/// integrate_epdiff followed by transport, stored on the returned path.
GeodesicPath
shoot(const BandlimitedField & v0, const SpectralOperator & op, const IntegratorConfig & cfg);

/// S(x + u(x)) with periodic multilinear interpolation.
SpatialImage
warp_image(const SpatialImage & source, const BandlimitedField & u);

SpatialImage
warp_image(const SpatialImage & source, const VectorImage & displacement);

struct WarpSample
{
  SpatialImage image;
  // Exact gradient of the multilinear interpolant of the source at x + u(x).
  VectorImage source_gradient;
};

WarpSample
warp_with_gradient(const SpatialImage & source, const VectorImage & displacement);

/// Nearest-neighbour periodic resampling of a label map.
LabelImage
warp_labels(const LabelImage & labels, const VectorImage & displacement);

/// det(I + Du) per voxel from periodic central differences of the spatial displacement.
SpatialImage
jacobian_determinant_map(const BandlimitedField & u);

} // namespace flowreg

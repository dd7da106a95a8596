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
#include "flowreg/shooting.hpp"

#include "flowreg/errors.hpp"

#include <cmath>
#include <string>

namespace flowreg
{

GeodesicPath
integrate_epdiff(const BandlimitedField & v0, const SpectralOperator & op, const IntegratorConfig & cfg)
{
  if (cfg.n_steps < 1)
    throw std::invalid_argument("integrate_epdiff: n_steps must be at least 1");
  if (!op.matches(v0) || v0.components() != op.rank())
    throw ShapeError("integrate_epdiff: initial velocity does not live on the operator grid");

  const double dt = 1.0 / cfg.n_steps;
  GeodesicPath path;
  path.velocities.reserve(cfg.n_steps + 1);
  path.velocities.push_back(v0);
  for (int k = 0; k < cfg.n_steps; ++k)
  {
    const auto & v = path.velocities.back();
    auto         next = v;
    next.axpy(dt, ad_dagger(v, v, op));
    if (!next.all_finite())
      throw NumericalError("EPDiff integration produced non-finite coefficients at step " + std::to_string(k), k);
    path.velocities.push_back(std::move(next));
  }
  return path;
}

std::vector<BandlimitedField>
transport_trajectory(const GeodesicPath & path, const SpectralOperator & op)
{
  if (path.velocities.empty())
    throw std::invalid_argument("transport_trajectory: empty path");
  const double                  dt = path.time_step();
  std::vector<BandlimitedField> u;
  u.reserve(path.velocities.size());
  u.push_back(path.velocities.front().zeros_like());
  for (int k = 0; k < path.n_steps(); ++k)
  {
    const auto & v = path.velocities[k];
    auto         next = u.back();
    next.axpy(-dt, v);
    next.axpy(-dt, jacobian_action(u.back(), v, op));
    if (!next.all_finite())
      throw NumericalError("displacement transport produced non-finite coefficients at step " + std::to_string(k), k);
    u.push_back(std::move(next));
  }
  return u;
}

BandlimitedField
transport_inverse_map(const GeodesicPath & path, const SpectralOperator & op)
{
  return transport_trajectory(path, op).back();
}

GeodesicPath
shoot(const BandlimitedField & v0, const SpectralOperator & op, const IntegratorConfig & cfg)
{
  auto path = integrate_epdiff(v0, op, cfg);
  path.displacements = transport_trajectory(path, op);
  return path;
}

// ---------------------------------------------------------------------------
// Resampling

namespace
{

struct Corner
{
  std::size_t offset;
  double      weight;
};

// Periodic multilinear stencil around a continuous position. Also returns the
// partial derivative weights of each corner with respect to each axis.
class Stencil
{
public:
  explicit Stencil(const std::vector<int> & dims)
    : m_Dims(dims)
    , m_Strides(strides_of(dims))
    , m_Corners(std::size_t{ 1 } << dims.size())
  {}

  void
  locate(std::span<const double> position)
  {
    const int d = static_cast<int>(m_Dims.size());
    for (int a = 0; a < d; ++a)
    {
      const double p = position[a];
      const double f = std::floor(p);
      m_Frac[a] = p - f;
      const long long n = m_Dims[a];
      long long       i0 = static_cast<long long>(f) % n;
      if (i0 < 0)
        i0 += n;
      m_Lo[a] = static_cast<std::size_t>(i0);
      m_Hi[a] = static_cast<std::size_t>((i0 + 1) % n);
    }
  }

  template <typename Getter>
  double
  value(Getter && get) const
  {
    const int d = static_cast<int>(m_Dims.size());
    double    acc = 0.0;
    for (std::size_t c = 0; c < m_Corners; ++c)
    {
      double      w = 1.0;
      std::size_t offset = 0;
      for (int a = 0; a < d; ++a)
      {
        const bool hi = (c >> (d - 1 - a)) & 1U;
        w *= hi ? m_Frac[a] : 1.0 - m_Frac[a];
        offset += (hi ? m_Hi[a] : m_Lo[a]) * m_Strides[a];
      }
      acc += w * get(offset);
    }
    return acc;
  }

  template <typename Getter>
  double
  derivative(int axis, Getter && get) const
  {
    const int d = static_cast<int>(m_Dims.size());
    double    acc = 0.0;
    for (std::size_t c = 0; c < m_Corners; ++c)
    {
      double      w = 1.0;
      std::size_t offset = 0;
      for (int a = 0; a < d; ++a)
      {
        const bool hi = (c >> (d - 1 - a)) & 1U;
        if (a == axis)
          w *= hi ? 1.0 : -1.0;
        else
          w *= hi ? m_Frac[a] : 1.0 - m_Frac[a];
        offset += (hi ? m_Hi[a] : m_Lo[a]) * m_Strides[a];
      }
      acc += w * get(offset);
    }
    return acc;
  }

  std::size_t
  nearest() const
  {
    std::size_t offset = 0;
    for (std::size_t a = 0; a < m_Dims.size(); ++a)
      offset += (m_Frac[a] < 0.5 ? m_Lo[a] : m_Hi[a]) * m_Strides[a];
    return offset;
  }

private:
  std::vector<int>         m_Dims;
  std::vector<std::size_t> m_Strides;
  std::size_t              m_Corners;
  double                   m_Frac[3] = { 0, 0, 0 };
  std::size_t              m_Lo[3] = { 0, 0, 0 };
  std::size_t              m_Hi[3] = { 0, 0, 0 };
};

void
require_displacement(const std::vector<int> & dims, const VectorImage & displacement)
{
  if (dims.size() < 1 || dims.size() > 3)
    throw ShapeError("resampling supports 1 to 3 dimensions");
  if (displacement.dims != dims || displacement.components.size() != dims.size())
    throw ShapeError("displacement field does not match image dims");
}

// Visits every voxel with its sampling position x + u(x).
template <typename Visitor>
void
for_each_sample(const std::vector<int> & dims, const VectorImage & displacement, Visitor && visit)
{
  const auto        strides = strides_of(dims);
  const std::size_t total = voxel_count(dims);
  const int         d = static_cast<int>(dims.size());
  double            position[3];
  for (std::size_t p = 0; p < total; ++p)
  {
    std::size_t rest = p;
    for (int a = 0; a < d; ++a)
    {
      position[a] = static_cast<double>(rest / strides[a]) + displacement.components[a][p];
      rest %= strides[a];
    }
    visit(p, std::span<const double>(position, d));
  }
}

} // namespace

WarpSample
warp_with_gradient(const SpatialImage & source, const VectorImage & displacement)
{
  require_displacement(source.dims(), displacement);
  const int  d = source.rank();
  WarpSample out{ SpatialImage(source.dims()), VectorImage(source.dims(), d) };
  Stencil    stencil(source.dims());
  const auto get = [&](std::size_t offset) { return source[offset]; };
  for_each_sample(source.dims(), displacement, [&](std::size_t p, std::span<const double> position) {
    stencil.locate(position);
    out.image[p] = stencil.value(get);
    for (int a = 0; a < d; ++a)
      out.source_gradient.components[a][p] = stencil.derivative(a, get);
  });
  return out;
}

SpatialImage
warp_image(const SpatialImage & source, const VectorImage & displacement)
{
  require_displacement(source.dims(), displacement);
  SpatialImage out(source.dims());
  Stencil      stencil(source.dims());
  const auto   get = [&](std::size_t offset) { return source[offset]; };
  for_each_sample(source.dims(), displacement, [&](std::size_t p, std::span<const double> position) {
    stencil.locate(position);
    out[p] = stencil.value(get);
  });
  return out;
}

SpatialImage
warp_image(const SpatialImage & source, const BandlimitedField & u)
{
  if (u.grid_dims() != source.dims())
    throw ShapeError("warp_image: displacement grid does not match the image");
  return warp_image(source, to_spatial(u));
}

LabelImage
warp_labels(const LabelImage & labels, const VectorImage & displacement)
{
  require_displacement(labels.dims, displacement);
  if (labels.labels.size() != voxel_count(labels.dims))
    throw ShapeError("warp_labels: label count does not match dims");
  LabelImage out{ labels.dims, std::vector<int>(labels.labels.size(), 0) };
  Stencil    stencil(labels.dims);
  for_each_sample(labels.dims, displacement, [&](std::size_t p, std::span<const double> position) {
    stencil.locate(position);
    out.labels[p] = labels.labels[stencil.nearest()];
  });
  return out;
}

SpatialImage
jacobian_determinant_map(const BandlimitedField & u)
{
  const int d = u.rank();
  if (d < 1 || d > 3 || u.components() != d)
    throw ShapeError("jacobian_determinant_map: expected a 1-3 dimensional vector field");

  const auto        field = to_spatial(u);
  const auto &      dims = field.dims;
  const auto        strides = strides_of(dims);
  const std::size_t total = voxel_count(dims);
  SpatialImage      det(dims);

  double      jac[3][3];
  std::size_t coord[3];
  for (std::size_t p = 0; p < total; ++p)
  {
    std::size_t rest = p;
    for (int a = 0; a < d; ++a)
    {
      coord[a] = rest / strides[a];
      rest %= strides[a];
    }
    for (int j = 0; j < d; ++j)
    {
      const std::size_t n = static_cast<std::size_t>(dims[j]);
      const std::size_t up = p - coord[j] * strides[j] + ((coord[j] + 1) % n) * strides[j];
      const std::size_t down = p - coord[j] * strides[j] + ((coord[j] + n - 1) % n) * strides[j];
      for (int i = 0; i < d; ++i)
        jac[i][j] = (i == j ? 1.0 : 0.0) + 0.5 * (field.components[i][up] - field.components[i][down]);
    }
    double value = 0.0;
    if (d == 1)
      value = jac[0][0];
    else if (d == 2)
      value = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    else
      value = jac[0][0] * (jac[1][1] * jac[2][2] - jac[1][2] * jac[2][1]) -
              jac[0][1] * (jac[1][0] * jac[2][2] - jac[1][2] * jac[2][0]) +
              jac[0][2] * (jac[1][0] * jac[2][1] - jac[1][1] * jac[2][0]);
    det[p] = value;
  }
  return det;
}

} // namespace flowreg

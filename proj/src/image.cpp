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
#include "flowreg/image.hpp"

#include "flowreg/errors.hpp"

#include <cmath>
#include <functional>
#include <numeric>

namespace flowreg
{

std::size_t
voxel_count(std::span<const int> dims)
{
  return std::accumulate(dims.begin(), dims.end(), std::size_t{ 1 },
                         [](std::size_t acc, int n) { return acc * static_cast<std::size_t>(n); });
}

std::vector<std::size_t>
strides_of(std::span<const int> dims)
{
  std::vector<std::size_t> strides(dims.size(), 1);
  for (int a = static_cast<int>(dims.size()) - 2; a >= 0; --a)
    strides[a] = strides[a + 1] * static_cast<std::size_t>(dims[a + 1]);
  return strides;
}

SpatialImage::SpatialImage(std::vector<int> dims, double fill)
  : m_Dims(std::move(dims))
  , m_Values(voxel_count(m_Dims), fill)
{}

SpatialImage::SpatialImage(std::vector<int> dims, std::vector<double> values)
  : m_Dims(std::move(dims))
  , m_Values(std::move(values))
{
  if (m_Values.size() != voxel_count(m_Dims))
    throw ShapeError("SpatialImage: value count does not match dims");
  if (!all_finite())
    throw std::invalid_argument("SpatialImage: non-finite intensity");
}

bool
SpatialImage::all_finite() const
{
  for (double v : m_Values)
    if (!std::isfinite(v))
      return false;
  return true;
}

VectorImage::VectorImage(std::vector<int> dims_, int n_components)
  : dims(std::move(dims_))
  , components(n_components, std::vector<double>(voxel_count(dims), 0.0))
{}

namespace
{
void
require_same_dims(const SpatialImage & a, const SpatialImage & b)
{
  if (a.dims() != b.dims())
    throw ShapeError("image dimensions differ");
}
} // namespace

double
rms_difference(const SpatialImage & a, const SpatialImage & b)
{
  require_same_dims(a, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    acc += (a[i] - b[i]) * (a[i] - b[i]);
  return a.size() == 0 ? 0.0 : std::sqrt(acc / static_cast<double>(a.size()));
}

double
mean_abs_difference(const SpatialImage & a, const SpatialImage & b)
{
  require_same_dims(a, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    acc += std::abs(a[i] - b[i]);
  return a.size() == 0 ? 0.0 : acc / static_cast<double>(a.size());
}

SpatialImage
abs_difference(const SpatialImage & a, const SpatialImage & b)
{
  require_same_dims(a, b);
  SpatialImage out(a.dims());
  for (std::size_t i = 0; i < a.size(); ++i)
    out[i] = std::abs(a[i] - b[i]);
  return out;
}

} // namespace flowreg

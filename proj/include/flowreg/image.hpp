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

#include <cstddef>
#include <span>
#include <vector>

namespace flowreg
{

std::size_t
voxel_count(std::span<const int> dims);

// Row-major strides, last axis fastest.
std::vector<std::size_t>
strides_of(std::span<const int> dims);

/// Real scalar intensities on a periodic grid with unit spacing.
class SpatialImage
{
public:
  SpatialImage() = default;
  explicit SpatialImage(std::vector<int> dims, double fill = 0.0);
  // Throws ShapeError on size mismatch and std::invalid_argument on NaN/Inf.
  SpatialImage(std::vector<int> dims, std::vector<double> values);

  int
  rank() const noexcept
  {
    return static_cast<int>(m_Dims.size());
  }
  const std::vector<int> &
  dims() const noexcept
  {
    return m_Dims;
  }
  std::size_t
  size() const noexcept
  {
    return m_Values.size();
  }
  std::span<double>
  values() noexcept
  {
    return m_Values;
  }
  std::span<const double>
  values() const noexcept
  {
    return m_Values;
  }
  double &
  operator[](std::size_t i)
  {
    return m_Values[i];
  }
  double
  operator[](std::size_t i) const
  {
    return m_Values[i];
  }

  bool
  all_finite() const;

  friend bool
  operator==(const SpatialImage &, const SpatialImage &) = default;

private:
  std::vector<int>    m_Dims;
  std::vector<double> m_Values;
};

/// Vector-valued samples on a full grid; components[c] holds the c-th coordinate.
struct VectorImage
{
  VectorImage() = default;
  VectorImage(std::vector<int> dims, int n_components);

  int
  rank() const noexcept
  {
    return static_cast<int>(dims.size());
  }

  std::vector<int>                 dims;
  std::vector<std::vector<double>> components;
};

/// Integer label map (0 = background).
struct LabelImage
{
  std::vector<int> dims;
  std::vector<int> labels;
};

double
rms_difference(const SpatialImage & a, const SpatialImage & b);

double
mean_abs_difference(const SpatialImage & a, const SpatialImage & b);

SpatialImage
abs_difference(const SpatialImage & a, const SpatialImage & b);

} // namespace flowreg

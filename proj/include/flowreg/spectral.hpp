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

// Bandlimited (truncated Fourier) vector fields and the spectral operators
// used by geodesic shooting.
//
// Conventions, used everywhere in the library:
//
//  * A truncated axis of size n keeps wavenumbers k = i - n/2 for i in [0, n).
//    For even n the slot k = -n/2 has no conjugate partner inside the box, so
//    it is excluded from the retained set and always held at zero.
//  * to_spatial evaluates f(x) = sum_k c_k exp(+2 pi i k.x / M) on the full
//    grid (x in voxel units, M the grid size per axis), so to_bandlimited uses
//    the 1/M-normalized forward transform and to_bandlimited(to_spatial(f)) == f.
//    Consequently <f, g>_spatial = M_total * <f~, g~>_coefficients.
//  * <a, b> on coefficients is Re sum conj(a_k) b_k over components and modes.
//  * The smoothness symbol uses the truncated grid: A(k) = -2 sum_j (cos(2 pi k_j / n_j) - 1).
//  * Derivatives use the full-grid central difference symbol i sin(2 pi k_j / M_j),
//    i.e. (f(x+1) - f(x-1)) / 2 with x in voxels.

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "flowreg/image.hpp"

namespace flowreg
{

using Complex = std::complex<double>;

/// Index bookkeeping for a centered box of retained wavenumbers.
class FrequencyBox
{
public:
  FrequencyBox() = default;
  explicit FrequencyBox(std::vector<int> dims);

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
    return m_Retained.size();
  }

  int
  wavenumber(int axis, int index) const noexcept
  {
    return index - m_Dims[axis] / 2;
  }
  // Per-axis wavenumbers of a flat index.
  std::vector<int>
  wavenumbers(std::size_t flat) const;
  // Flat index of a wavenumber vector, or -1 when it lies outside the box.
  std::ptrdiff_t
  flat_index(std::span<const int> k) const;

  bool
  retained(std::size_t flat) const noexcept
  {
    return m_Retained[flat] != 0;
  }
  // Flat index of -k. Only meaningful for retained modes.
  std::size_t
  mirror(std::size_t flat) const noexcept
  {
    return m_Mirror[flat];
  }
  std::size_t
  zero_frequency() const noexcept
  {
    return m_Zero;
  }

  friend bool
  operator==(const FrequencyBox & a, const FrequencyBox & b)
  {
    return a.m_Dims == b.m_Dims;
  }

private:
  std::vector<int>         m_Dims;
  std::vector<char>        m_Retained;
  std::vector<std::size_t> m_Mirror;
  std::size_t              m_Zero = 0;
};

/// Truncated complex Fourier coefficients of a vector (or scalar) field.
/// Storage is component-major: coefficients()[c * modes() + flat].
class BandlimitedField
{
public:
  BandlimitedField() = default;
  // A zero field with one component per spatial axis.
  BandlimitedField(std::vector<int> trunc_dims, std::vector<int> grid_dims);
  BandlimitedField(std::vector<int> trunc_dims, std::vector<int> grid_dims, int n_components);

  const FrequencyBox &
  box() const noexcept
  {
    return *m_Box;
  }
  const std::vector<int> &
  trunc_dims() const noexcept
  {
    return m_Box->dims();
  }
  const std::vector<int> &
  grid_dims() const noexcept
  {
    return m_GridDims;
  }
  int
  rank() const noexcept
  {
    return static_cast<int>(m_GridDims.size());
  }
  int
  components() const noexcept
  {
    return m_Components;
  }
  std::size_t
  modes() const noexcept
  {
    return m_Box->size();
  }

  std::span<Complex>
  component(int c)
  {
    return std::span<Complex>(m_Coeffs).subspan(static_cast<std::size_t>(c) * modes(), modes());
  }
  std::span<const Complex>
  component(int c) const
  {
    return std::span<const Complex>(m_Coeffs).subspan(static_cast<std::size_t>(c) * modes(), modes());
  }
  std::span<Complex>
  coefficients() noexcept
  {
    return m_Coeffs;
  }
  std::span<const Complex>
  coefficients() const noexcept
  {
    return m_Coeffs;
  }

  // Same box, grid and component count.
  bool
  same_space(const BandlimitedField & other) const;
  // A zero field on the same space.
  BandlimitedField
  zeros_like() const;

  BandlimitedField &
  operator+=(const BandlimitedField & other);
  BandlimitedField &
  operator-=(const BandlimitedField & other);
  BandlimitedField &
  operator*=(double s);
  // this += a * x
  void
  axpy(double a, const BandlimitedField & x);

  friend BandlimitedField
  operator+(BandlimitedField a, const BandlimitedField & b)
  {
    return a += b;
  }
  friend BandlimitedField
  operator-(BandlimitedField a, const BandlimitedField & b)
  {
    return a -= b;
  }
  friend BandlimitedField
  operator*(double s, BandlimitedField a)
  {
    return a *= s;
  }

  // Re sum conj(this) * other.
  double
  dot(const BandlimitedField & other) const;
  double
  squared_norm() const;
  bool
  all_finite() const;

  // Largest |c_k - conj(c_-k)| plus any magnitude left in unretained slots.
  double
  hermitian_defect() const;
  // Projection onto real-valued fields: (c_k + conj(c_-k)) / 2, unretained slots zeroed.
  BandlimitedField
  hermitian_part() const;

private:
  std::shared_ptr<const FrequencyBox> m_Box;
  std::vector<int>                    m_GridDims;
  int                                 m_Components = 0;
  std::vector<Complex>                m_Coeffs;
};

/// Negative discrete Fourier Laplacian on a truncated box, one value per mode.
/// Throws std::invalid_argument for any axis shorter than 2.
std::vector<double>
laplacian_symbol(std::span<const int> trunc_dims);

enum class Smoothing
{
  L, // (alpha A + 1)^power
  K  // inverse of L
};

/// Diagonal Fourier symbols shared by all operators at one regularity level.
class SpectralOperator
{
public:
  SpectralOperator(std::vector<int> trunc_dims, std::vector<int> grid_dims, double alpha, int power = 3);

  const FrequencyBox &
  box() const noexcept
  {
    return m_Box;
  }
  const std::vector<int> &
  trunc_dims() const noexcept
  {
    return m_Box.dims();
  }
  const std::vector<int> &
  grid_dims() const noexcept
  {
    return m_GridDims;
  }
  int
  rank() const noexcept
  {
    return static_cast<int>(m_GridDims.size());
  }
  double
  alpha() const noexcept
  {
    return m_Alpha;
  }
  int
  power() const noexcept
  {
    return m_Power;
  }

  std::span<const double>
  laplacian() const noexcept
  {
    return m_Laplacian;
  }
  std::span<const double>
  l_symbol() const noexcept
  {
    return m_L;
  }
  std::span<const double>
  k_symbol() const noexcept
  {
    return m_K;
  }
  // sin(2 pi k / M) along one axis, indexed by the box index on that axis.
  std::span<const double>
  derivative_symbol(int axis) const noexcept
  {
    return m_Derivative[axis];
  }

  SpectralOperator
  with_alpha(double alpha) const;

  // Field lives on this operator's box and grid.
  bool
  matches(const BandlimitedField & f) const;
  BandlimitedField
  zero_field() const;

private:
  FrequencyBox                     m_Box;
  std::vector<int>                 m_GridDims;
  double                           m_Alpha;
  int                              m_Power;
  std::vector<double>              m_Laplacian;
  std::vector<double>              m_L;
  std::vector<double>              m_K;
  std::vector<std::vector<double>> m_Derivative;
};

BandlimitedField
apply_smoothing(const SpectralOperator & op, const BandlimitedField & f, Smoothing direction);

enum class ProductMode
{
  Convolve, // coefficients of a(x) b(x)
  Correlate // coefficients of conj(a(x)) b(x)
};

/// Anti-aliased product of two scalar bandlimited signals on one box: both are
/// zero-padded to twice the box per axis, multiplied pointwise, transformed
/// back and truncated to the retained modes.
std::vector<Complex>
truncated_convolution(const FrequencyBox & box,
                      std::span<const Complex> a,
                      std::span<const Complex> b,
                      ProductMode mode = ProductMode::Convolve);

struct JacobianFields
{
  // by_axis[j].component(i) holds d f_i / d x_j.
  std::vector<BandlimitedField> by_axis;
  // Scalar field sum_j d f_j / d x_j.
  BandlimitedField divergence;
};

JacobianFields
jacobian_and_divergence(const SpectralOperator & op, const BandlimitedField & f);

/// ad^dagger_v w = -K[ (Dv)^T * Lw + div(Lw (x) v) ], the metric adjoint of ad_v.
BandlimitedField
ad_dagger(const BandlimitedField & v, const BandlimitedField & w, const SpectralOperator & op);

/// ad_v w = Dv w - Dw v (negative Jacobi-Lie bracket).
BandlimitedField
ad_bracket(const BandlimitedField & v, const BandlimitedField & w, const SpectralOperator & op);

/// (Du) v with all products anti-aliased: component i is sum_j d_j u_i v_j.
BandlimitedField
jacobian_action(const BandlimitedField & u, const BandlimitedField & v, const SpectralOperator & op);

/// Euclidean transpose of du -> (D du) v, applied to z: component i is -sum_j d_j (conj(v_j) z_i).
BandlimitedField
jacobian_action_transpose_u(const BandlimitedField & v, const BandlimitedField & z, const SpectralOperator & op);

/// Euclidean transpose of dv -> (Du) dv, applied to z: component j is sum_i conj(d_j u_i) z_i.
BandlimitedField
jacobian_action_transpose_v(const BandlimitedField & u, const BandlimitedField & z, const SpectralOperator & op);

/// Evaluate every component on the full grid (real part).
VectorImage
to_spatial(const BandlimitedField & f);

/// Complex-valued evaluation; the imaginary part vanishes for Hermitian fields.
std::vector<std::vector<Complex>>
to_spatial_complex(const BandlimitedField & f);

/// Low-pass projection of a spatial field onto the retained modes of trunc_dims.
/// Throws ShapeError when trunc_dims exceeds the grid.
BandlimitedField
to_bandlimited(const VectorImage & g, std::vector<int> trunc_dims);

BandlimitedField
to_bandlimited(const SpatialImage & g, std::vector<int> trunc_dims);

} // namespace flowreg

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
#include "flowreg/spectral.hpp"

#include "flowreg/errors.hpp"
#include "flowreg/fft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace flowreg
{

// ---------------------------------------------------------------------------
// FrequencyBox

FrequencyBox::FrequencyBox(std::vector<int> dims)
  : m_Dims(std::move(dims))
{
  for (int n : m_Dims)
    if (n < 1)
      throw std::invalid_argument("FrequencyBox: axis size must be positive");

  const std::size_t total = voxel_count(m_Dims);
  const auto        strides = strides_of(m_Dims);
  m_Retained.assign(total, 1);
  m_Mirror.assign(total, 0);

  for (std::size_t flat = 0; flat < total; ++flat)
  {
    std::size_t mirror = 0;
    std::size_t rest = flat;
    for (int a = 0; a < rank(); ++a)
    {
      const int n = m_Dims[a];
      const int i = static_cast<int>(rest / strides[a]);
      rest %= strides[a];
      if (n % 2 == 0 && i == 0)
        m_Retained[flat] = 0;
      const int im = 2 * (n / 2) - i;
      mirror += static_cast<std::size_t>(im >= 0 && im < n ? im : 0) * strides[a];
    }
    m_Mirror[flat] = m_Retained[flat] ? mirror : flat;
  }

  std::size_t zero = 0;
  for (int a = 0; a < rank(); ++a)
    zero += static_cast<std::size_t>(m_Dims[a] / 2) * strides[a];
  m_Zero = zero;
}

std::vector<int>
FrequencyBox::wavenumbers(std::size_t flat) const
{
  const auto       strides = strides_of(m_Dims);
  std::vector<int> k(m_Dims.size());
  for (int a = 0; a < rank(); ++a)
  {
    k[a] = wavenumber(a, static_cast<int>(flat / strides[a]));
    flat %= strides[a];
  }
  return k;
}

std::ptrdiff_t
FrequencyBox::flat_index(std::span<const int> k) const
{
  if (k.size() != m_Dims.size())
    return -1;
  const auto     strides = strides_of(m_Dims);
  std::ptrdiff_t flat = 0;
  for (int a = 0; a < rank(); ++a)
  {
    const int i = k[a] + m_Dims[a] / 2;
    if (i < 0 || i >= m_Dims[a])
      return -1;
    flat += static_cast<std::ptrdiff_t>(i) * static_cast<std::ptrdiff_t>(strides[a]);
  }
  return flat;
}

// ---------------------------------------------------------------------------
// BandlimitedField

BandlimitedField::BandlimitedField(std::vector<int> trunc_dims, std::vector<int> grid_dims)
  : BandlimitedField(trunc_dims, grid_dims, static_cast<int>(grid_dims.size()))
{}

BandlimitedField::BandlimitedField(std::vector<int> trunc_dims, std::vector<int> grid_dims, int n_components)
  : m_GridDims(std::move(grid_dims))
  , m_Components(n_components)
{
  if (trunc_dims.size() != m_GridDims.size())
    throw ShapeError("BandlimitedField: truncation and grid rank differ");
  for (std::size_t a = 0; a < trunc_dims.size(); ++a)
    if (trunc_dims[a] > m_GridDims[a])
      throw ShapeError("BandlimitedField: truncation exceeds grid dims");
  m_Box = std::make_shared<const FrequencyBox>(std::move(trunc_dims));
  m_Coeffs.assign(static_cast<std::size_t>(m_Components) * m_Box->size(), Complex{});
}

bool
BandlimitedField::same_space(const BandlimitedField & other) const
{
  return m_Box && other.m_Box && m_Box->dims() == other.m_Box->dims() && m_GridDims == other.m_GridDims &&
         m_Components == other.m_Components;
}

BandlimitedField
BandlimitedField::zeros_like() const
{
  BandlimitedField out = *this;
  std::fill(out.m_Coeffs.begin(), out.m_Coeffs.end(), Complex{});
  return out;
}

namespace
{
void
require_same_space(const BandlimitedField & a, const BandlimitedField & b)
{
  if (!a.same_space(b))
    throw ShapeError("bandlimited fields live on different grids");
}
} // namespace

BandlimitedField &
BandlimitedField::operator+=(const BandlimitedField & other)
{
  require_same_space(*this, other);
  for (std::size_t i = 0; i < m_Coeffs.size(); ++i)
    m_Coeffs[i] += other.m_Coeffs[i];
  return *this;
}

BandlimitedField &
BandlimitedField::operator-=(const BandlimitedField & other)
{
  require_same_space(*this, other);
  for (std::size_t i = 0; i < m_Coeffs.size(); ++i)
    m_Coeffs[i] -= other.m_Coeffs[i];
  return *this;
}

BandlimitedField &
BandlimitedField::operator*=(double s)
{
  for (auto & c : m_Coeffs)
    c *= s;
  return *this;
}

void
BandlimitedField::axpy(double a, const BandlimitedField & x)
{
  require_same_space(*this, x);
  for (std::size_t i = 0; i < m_Coeffs.size(); ++i)
    m_Coeffs[i] += a * x.m_Coeffs[i];
}

double
BandlimitedField::dot(const BandlimitedField & other) const
{
  require_same_space(*this, other);
  double acc = 0.0;
  for (std::size_t i = 0; i < m_Coeffs.size(); ++i)
    acc += m_Coeffs[i].real() * other.m_Coeffs[i].real() + m_Coeffs[i].imag() * other.m_Coeffs[i].imag();
  return acc;
}

double
BandlimitedField::squared_norm() const
{
  double acc = 0.0;
  for (const auto & c : m_Coeffs)
    acc += std::norm(c);
  return acc;
}

bool
BandlimitedField::all_finite() const
{
  for (const auto & c : m_Coeffs)
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
      return false;
  return true;
}

double
BandlimitedField::hermitian_defect() const
{
  double worst = 0.0;
  for (int c = 0; c < m_Components; ++c)
  {
    auto coeffs = component(c);
    for (std::size_t k = 0; k < modes(); ++k)
    {
      const double d = m_Box->retained(k) ? std::abs(coeffs[k] - std::conj(coeffs[m_Box->mirror(k)]))
                                          : std::abs(coeffs[k]);
      worst = std::max(worst, d);
    }
  }
  return worst;
}

BandlimitedField
BandlimitedField::hermitian_part() const
{
  BandlimitedField out = zeros_like();
  for (int c = 0; c < m_Components; ++c)
  {
    auto in = component(c);
    auto dst = out.component(c);
    for (std::size_t k = 0; k < modes(); ++k)
      if (m_Box->retained(k))
        dst[k] = 0.5 * (in[k] + std::conj(in[m_Box->mirror(k)]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Operator symbols

std::vector<double>
laplacian_symbol(std::span<const int> trunc_dims)
{
  for (int n : trunc_dims)
    if (n < 2)
      throw std::invalid_argument("laplacian_symbol: every axis needs at least 2 frequencies");

  const FrequencyBox  box(std::vector<int>(trunc_dims.begin(), trunc_dims.end()));
  std::vector<double> symbol(box.size(), 0.0);
  for (std::size_t flat = 0; flat < box.size(); ++flat)
  {
    const auto k = box.wavenumbers(flat);
    double     acc = 0.0;
    for (int a = 0; a < box.rank(); ++a)
    {
      if (k[a] == 0)
        continue;
      const double xi = static_cast<double>(k[a]) / static_cast<double>(trunc_dims[a]);
      acc += -2.0 * (std::cos(2.0 * std::numbers::pi * xi) - 1.0);
    }
    symbol[flat] = acc;
  }
  return symbol;
}

SpectralOperator::SpectralOperator(std::vector<int> trunc_dims, std::vector<int> grid_dims, double alpha, int power)
  : m_Box(trunc_dims)
  , m_GridDims(std::move(grid_dims))
  , m_Alpha(alpha)
  , m_Power(power)
{
  if (trunc_dims.size() != m_GridDims.size())
    throw ShapeError("SpectralOperator: truncation and grid rank differ");
  for (std::size_t a = 0; a < trunc_dims.size(); ++a)
    if (trunc_dims[a] > m_GridDims[a])
      throw ShapeError("SpectralOperator: truncation exceeds grid dims");
  if (!(alpha >= 0.0) || !std::isfinite(alpha))
    throw std::invalid_argument("SpectralOperator: alpha must be finite and non-negative");
  if (power < 1)
    throw std::invalid_argument("SpectralOperator: power must be positive");

  m_Laplacian = laplacian_symbol(trunc_dims);
  m_L.resize(m_Laplacian.size());
  m_K.resize(m_Laplacian.size());
  for (std::size_t k = 0; k < m_Laplacian.size(); ++k)
  {
    m_L[k] = std::pow(m_Alpha * m_Laplacian[k] + 1.0, m_Power);
    m_K[k] = 1.0 / m_L[k];
  }

  m_Derivative.resize(trunc_dims.size());
  for (std::size_t a = 0; a < trunc_dims.size(); ++a)
  {
    m_Derivative[a].resize(trunc_dims[a]);
    for (int i = 0; i < trunc_dims[a]; ++i)
    {
      const double k = static_cast<double>(m_Box.wavenumber(static_cast<int>(a), i));
      m_Derivative[a][i] = std::sin(2.0 * std::numbers::pi * k / static_cast<double>(m_GridDims[a]));
    }
  }
}

SpectralOperator
SpectralOperator::with_alpha(double alpha) const
{
  return SpectralOperator(m_Box.dims(), m_GridDims, alpha, m_Power);
}

bool
SpectralOperator::matches(const BandlimitedField & f) const
{
  return f.trunc_dims() == m_Box.dims() && f.grid_dims() == m_GridDims;
}

BandlimitedField
SpectralOperator::zero_field() const
{
  return BandlimitedField(m_Box.dims(), m_GridDims);
}

BandlimitedField
apply_smoothing(const SpectralOperator & op, const BandlimitedField & f, Smoothing direction)
{
  if (!op.matches(f))
    throw ShapeError("apply_smoothing: field and operator grids differ");
  const auto       symbol = direction == Smoothing::L ? op.l_symbol() : op.k_symbol();
  BandlimitedField out = f;
  for (int c = 0; c < out.components(); ++c)
  {
    auto coeffs = out.component(c);
    for (std::size_t k = 0; k < coeffs.size(); ++k)
      coeffs[k] *= symbol[k];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Anti-aliased products

namespace
{

// Lifts retained coefficients onto a grid of twice the box size per axis, where
// the product of two bandlimited signals is represented without wrap-around.
class PaddedGrid
{
public:
  explicit PaddedGrid(const FrequencyBox & box)
    : m_Box(box)
  {
    for (int n : box.dims())
      m_Padded.push_back(2 * n);
    m_Count = voxel_count(m_Padded);
    const auto strides = strides_of(m_Padded);
    m_Slot.resize(box.size());
    for (std::size_t flat = 0; flat < box.size(); ++flat)
    {
      const auto  k = box.wavenumbers(flat);
      std::size_t slot = 0;
      for (int a = 0; a < box.rank(); ++a)
      {
        const int p = m_Padded[a];
        slot += static_cast<std::size_t>(((k[a] % p) + p) % p) * strides[a];
      }
      m_Slot[flat] = slot;
    }
  }

  std::size_t
  count() const noexcept
  {
    return m_Count;
  }

  std::vector<Complex>
  lift(std::span<const Complex> coeffs) const
  {
    std::vector<Complex> grid(m_Count);
    for (std::size_t flat = 0; flat < coeffs.size(); ++flat)
      if (m_Box.retained(flat))
        grid[m_Slot[flat]] = coeffs[flat];
    fft::transform(grid, m_Padded, fft::Direction::Inverse);
    return grid;
  }

  std::vector<Complex>
  project(std::vector<Complex> grid) const
  {
    fft::transform(grid, m_Padded, fft::Direction::Forward);
    const double         scale = 1.0 / static_cast<double>(m_Count);
    std::vector<Complex> coeffs(m_Box.size());
    for (std::size_t flat = 0; flat < coeffs.size(); ++flat)
      if (m_Box.retained(flat))
        coeffs[flat] = grid[m_Slot[flat]] * scale;
    return coeffs;
  }

private:
  const FrequencyBox &     m_Box;
  std::vector<int>         m_Padded;
  std::size_t              m_Count = 0;
  std::vector<std::size_t> m_Slot;
};

// Coefficients of d f / d x_axis: multiply by i sin(2 pi k / M).
std::vector<Complex>
differentiate(const SpectralOperator & op, std::span<const Complex> coeffs, int axis)
{
  const auto &             box = op.box();
  const auto               symbol = op.derivative_symbol(axis);
  const auto               strides = strides_of(box.dims());
  const std::size_t        n = static_cast<std::size_t>(box.dims()[axis]);
  std::vector<Complex>     out(coeffs.size());
  for (std::size_t flat = 0; flat < coeffs.size(); ++flat)
  {
    const std::size_t i = (flat / strides[axis]) % n;
    out[flat] = Complex(0.0, symbol[i]) * coeffs[flat];
  }
  return out;
}

void
add_derivative(const SpectralOperator & op, std::span<const Complex> coeffs, int axis, std::span<Complex> dst)
{
  const auto d = differentiate(op, coeffs, axis);
  for (std::size_t k = 0; k < dst.size(); ++k)
    dst[k] += d[k];
}

void
add_to(std::span<Complex> dst, const std::vector<Complex> & src, double scale = 1.0)
{
  for (std::size_t k = 0; k < dst.size(); ++k)
    dst[k] += scale * src[k];
}

void
require_vector_field(const SpectralOperator & op, const BandlimitedField & f, const char * what)
{
  if (!op.matches(f) || f.components() != op.rank())
    throw ShapeError(std::string(what) + ": field does not live on the operator grid");
}

} // namespace

std::vector<Complex>
truncated_convolution(const FrequencyBox & box, std::span<const Complex> a, std::span<const Complex> b, ProductMode mode)
{
  if (a.size() != box.size() || b.size() != box.size())
    throw ShapeError("truncated_convolution: coefficient count does not match the box");
  const PaddedGrid grid(box);
  auto             fa = grid.lift(a);
  const auto       fb = grid.lift(b);
  for (std::size_t i = 0; i < fa.size(); ++i)
    fa[i] = (mode == ProductMode::Correlate ? std::conj(fa[i]) : fa[i]) * fb[i];
  return grid.project(std::move(fa));
}

JacobianFields
jacobian_and_divergence(const SpectralOperator & op, const BandlimitedField & f)
{
  require_vector_field(op, f, "jacobian_and_divergence");
  const int      d = op.rank();
  JacobianFields out;
  out.divergence = BandlimitedField(op.trunc_dims(), op.grid_dims(), 1);
  for (int j = 0; j < d; ++j)
  {
    BandlimitedField dj = f.zeros_like();
    for (int i = 0; i < d; ++i)
    {
      const auto deriv = differentiate(op, f.component(i), j);
      std::copy(deriv.begin(), deriv.end(), dj.component(i).begin());
    }
    add_to(out.divergence.component(0), std::vector<Complex>(dj.component(j).begin(), dj.component(j).end()));
    out.by_axis.push_back(std::move(dj));
  }
  return out;
}

BandlimitedField
ad_dagger(const BandlimitedField & v, const BandlimitedField & w, const SpectralOperator & op)
{
  require_vector_field(op, v, "ad_dagger");
  require_vector_field(op, w, "ad_dagger");
  const int        d = op.rank();
  const PaddedGrid grid(op.box());
  const auto       m = apply_smoothing(op, w, Smoothing::L);

  std::vector<std::vector<Complex>> vs(d), ms(d);
  for (int i = 0; i < d; ++i)
  {
    vs[i] = grid.lift(v.component(i));
    ms[i] = grid.lift(m.component(i));
  }

  BandlimitedField acc = v.zeros_like();

  // (Dv)^T correlated with Lw: component j is sum_i d_j v_i (Lw)_i
  for (int j = 0; j < d; ++j)
  {
    std::vector<Complex> sum(grid.count());
    for (int i = 0; i < d; ++i)
    {
      const auto dv = grid.lift(differentiate(op, v.component(i), j));
      for (std::size_t p = 0; p < sum.size(); ++p)
        sum[p] += std::conj(dv[p]) * ms[i][p];
    }
    add_to(acc.component(j), grid.project(std::move(sum)));
  }

  // div(Lw (x) v): component i is sum_j d_j ((Lw)_i v_j)
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
    {
      std::vector<Complex> prod(grid.count());
      for (std::size_t p = 0; p < prod.size(); ++p)
        prod[p] = ms[i][p] * vs[j][p];
      add_derivative(op, grid.project(std::move(prod)), j, acc.component(i));
    }

  auto out = apply_smoothing(op, acc, Smoothing::K);
  out *= -1.0;
  return out;
}

BandlimitedField
ad_bracket(const BandlimitedField & v, const BandlimitedField & w, const SpectralOperator & op)
{
  require_vector_field(op, v, "ad_bracket");
  require_vector_field(op, w, "ad_bracket");
  const int        d = op.rank();
  const PaddedGrid grid(op.box());

  std::vector<std::vector<Complex>> vs(d), ws(d);
  for (int i = 0; i < d; ++i)
  {
    vs[i] = grid.lift(v.component(i));
    ws[i] = grid.lift(w.component(i));
  }

  BandlimitedField out = v.zeros_like();
  for (int i = 0; i < d; ++i)
  {
    std::vector<Complex> sum(grid.count());
    for (int j = 0; j < d; ++j)
    {
      const auto dv = grid.lift(differentiate(op, v.component(i), j));
      const auto dw = grid.lift(differentiate(op, w.component(i), j));
      for (std::size_t p = 0; p < sum.size(); ++p)
        sum[p] += dv[p] * ws[j][p] - dw[p] * vs[j][p];
    }
    add_to(out.component(i), grid.project(std::move(sum)));
  }
  return out;
}

BandlimitedField
jacobian_action(const BandlimitedField & u, const BandlimitedField & v, const SpectralOperator & op)
{
  require_vector_field(op, u, "jacobian_action");
  require_vector_field(op, v, "jacobian_action");
  const int        d = op.rank();
  const PaddedGrid grid(op.box());

  std::vector<std::vector<Complex>> vs(d);
  for (int j = 0; j < d; ++j)
    vs[j] = grid.lift(v.component(j));

  BandlimitedField out = u.zeros_like();
  for (int i = 0; i < d; ++i)
  {
    std::vector<Complex> sum(grid.count());
    for (int j = 0; j < d; ++j)
    {
      const auto du = grid.lift(differentiate(op, u.component(i), j));
      for (std::size_t p = 0; p < sum.size(); ++p)
        sum[p] += du[p] * vs[j][p];
    }
    add_to(out.component(i), grid.project(std::move(sum)));
  }
  return out;
}

BandlimitedField
jacobian_action_transpose_u(const BandlimitedField & v, const BandlimitedField & z, const SpectralOperator & op)
{
  require_vector_field(op, v, "jacobian_action_transpose_u");
  require_vector_field(op, z, "jacobian_action_transpose_u");
  const int        d = op.rank();
  const PaddedGrid grid(op.box());

  std::vector<std::vector<Complex>> vs(d), zs(d);
  for (int i = 0; i < d; ++i)
  {
    vs[i] = grid.lift(v.component(i));
    zs[i] = grid.lift(z.component(i));
  }

  BandlimitedField out = v.zeros_like();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
    {
      std::vector<Complex> prod(grid.count());
      for (std::size_t p = 0; p < prod.size(); ++p)
        prod[p] = std::conj(vs[j][p]) * zs[i][p];
      add_derivative(op, grid.project(std::move(prod)), j, out.component(i));
    }
  out *= -1.0;
  return out;
}

BandlimitedField
jacobian_action_transpose_v(const BandlimitedField & u, const BandlimitedField & z, const SpectralOperator & op)
{
  require_vector_field(op, u, "jacobian_action_transpose_v");
  require_vector_field(op, z, "jacobian_action_transpose_v");
  const int        d = op.rank();
  const PaddedGrid grid(op.box());

  std::vector<std::vector<Complex>> zs(d);
  for (int i = 0; i < d; ++i)
    zs[i] = grid.lift(z.component(i));

  BandlimitedField out = u.zeros_like();
  for (int j = 0; j < d; ++j)
  {
    std::vector<Complex> sum(grid.count());
    for (int i = 0; i < d; ++i)
    {
      const auto du = grid.lift(differentiate(op, u.component(i), j));
      for (std::size_t p = 0; p < sum.size(); ++p)
        sum[p] += std::conj(du[p]) * zs[i][p];
    }
    add_to(out.component(j), grid.project(std::move(sum)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Spatial <-> bandlimited

namespace
{

// Applies a dense (rows x cols) matrix along one axis of a row-major array.
std::vector<Complex>
transform_axis(const std::vector<Complex> & in,
               std::vector<int> &           shape,
               int                          axis,
               const std::vector<Complex> & table,
               int                          rows)
{
  const int   cols = shape[axis];
  std::size_t outer = 1, inner = 1;
  for (int a = 0; a < axis; ++a)
    outer *= static_cast<std::size_t>(shape[a]);
  for (int a = axis + 1; a < static_cast<int>(shape.size()); ++a)
    inner *= static_cast<std::size_t>(shape[a]);

  std::vector<Complex> out(outer * static_cast<std::size_t>(rows) * inner);
  for (std::size_t o = 0; o < outer; ++o)
    for (int r = 0; r < rows; ++r)
    {
      Complex *       dst = out.data() + (o * rows + r) * inner;
      const Complex * row = table.data() + static_cast<std::size_t>(r) * cols;
      for (int c = 0; c < cols; ++c)
      {
        const Complex   t = row[c];
        const Complex * src = in.data() + (o * cols + c) * inner;
        for (std::size_t q = 0; q < inner; ++q)
          dst[q] += t * src[q];
      }
    }
  shape[axis] = rows;
  return out;
}

// table[x * n + i] = exp(sign * 2 pi i k_i x / M) * scale
std::vector<Complex>
twiddle_table(const FrequencyBox & box, int axis, int grid_size, double sign, double scale, bool grid_major)
{
  const int            n = box.dims()[axis];
  std::vector<Complex> table(static_cast<std::size_t>(n) * grid_size);
  for (int x = 0; x < grid_size; ++x)
    for (int i = 0; i < n; ++i)
    {
      // reduce k*x mod M before the trig call to keep phases exact for large grids
      const long long kx = static_cast<long long>(box.wavenumber(axis, i)) * x;
      const long long r = ((kx % grid_size) + grid_size) % grid_size;
      const double    phase = sign * 2.0 * std::numbers::pi * static_cast<double>(r) / grid_size;
      const Complex   value = std::polar(scale, phase);
      if (grid_major)
        table[static_cast<std::size_t>(x) * n + i] = value;
      else
        table[static_cast<std::size_t>(i) * grid_size + x] = value;
    }
  return table;
}

std::vector<Complex>
evaluate_component(const FrequencyBox & box, const std::vector<int> & grid_dims, std::span<const Complex> coeffs)
{
  std::vector<Complex> data(coeffs.begin(), coeffs.end());
  for (std::size_t flat = 0; flat < data.size(); ++flat)
    if (!box.retained(flat))
      data[flat] = Complex{};
  std::vector<int> shape = box.dims();
  for (int a = 0; a < box.rank(); ++a)
    data = transform_axis(data, shape, a, twiddle_table(box, a, grid_dims[a], +1.0, 1.0, true), grid_dims[a]);
  return data;
}

std::vector<Complex>
project_component(const FrequencyBox & box, const std::vector<int> & grid_dims, std::span<const double> values)
{
  std::vector<Complex> data(values.begin(), values.end());
  std::vector<int>     shape = grid_dims;
  for (int a = 0; a < box.rank(); ++a)
    data = transform_axis(data, shape, a,
                          twiddle_table(box, a, grid_dims[a], -1.0, 1.0 / grid_dims[a], false), box.dims()[a]);
  for (std::size_t flat = 0; flat < data.size(); ++flat)
    if (!box.retained(flat))
      data[flat] = Complex{};
  return data;
}

} // namespace

std::vector<std::vector<Complex>>
to_spatial_complex(const BandlimitedField & f)
{
  std::vector<std::vector<Complex>> out;
  for (int c = 0; c < f.components(); ++c)
    out.push_back(evaluate_component(f.box(), f.grid_dims(), f.component(c)));
  return out;
}

VectorImage
to_spatial(const BandlimitedField & f)
{
  VectorImage out(f.grid_dims(), f.components());
  for (int c = 0; c < f.components(); ++c)
  {
    const auto values = evaluate_component(f.box(), f.grid_dims(), f.component(c));
    for (std::size_t p = 0; p < values.size(); ++p)
      out.components[c][p] = values[p].real();
  }
  return out;
}

BandlimitedField
to_bandlimited(const VectorImage & g, std::vector<int> trunc_dims)
{
  if (trunc_dims.size() != g.dims.size())
    throw ShapeError("to_bandlimited: truncation rank differs from grid rank");
  BandlimitedField out(std::move(trunc_dims), g.dims, static_cast<int>(g.components.size()));
  for (int c = 0; c < out.components(); ++c)
  {
    if (g.components[c].size() != voxel_count(g.dims))
      throw ShapeError("to_bandlimited: component size does not match dims");
    const auto coeffs = project_component(out.box(), g.dims, g.components[c]);
    std::copy(coeffs.begin(), coeffs.end(), out.component(c).begin());
  }
  return out;
}

BandlimitedField
to_bandlimited(const SpatialImage & g, std::vector<int> trunc_dims)
{
  VectorImage wrapped(g.dims(), 1);
  std::copy(g.values().begin(), g.values().end(), wrapped.components[0].begin());
  return to_bandlimited(wrapped, std::move(trunc_dims));
}

} // namespace flowreg

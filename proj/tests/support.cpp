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
#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace flowreg::testing
{

namespace
{

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<int>
wavenumbers_of(const FrequencyBox & box, std::size_t flat)
{
  return box.wavenumbers(flat);
}

} // namespace

BandlimitedField
random_field(std::vector<int> trunc, std::vector<int> grid, std::uint64_t seed, bool hermitian, int components)
{
  const int        n = components < 0 ? static_cast<int>(grid.size()) : components;
  BandlimitedField f(trunc, grid, n);
  std::mt19937_64  rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto & c : f.coefficients())
    c = Complex(normal(rng), normal(rng));
  if (hermitian)
    return f.hermitian_part();
  for (int c = 0; c < n; ++c)
    for (std::size_t k = 0; k < f.modes(); ++k)
      if (!f.box().retained(k))
        f.component(c)[k] = 0.0;
  return f;
}

double
oracle_laplacian(const FrequencyBox & box, std::size_t flat)
{
  const auto k = wavenumbers_of(box, flat);
  double     acc = 0.0;
  for (int j = 0; j < box.rank(); ++j)
    acc += -2.0 * (std::cos(kTwoPi * k[j] / box.dims()[j]) - 1.0);
  return acc;
}

std::vector<Complex>
brute_product(const FrequencyBox & box, std::span<const Complex> a, std::span<const Complex> b, ProductMode mode)
{
  std::vector<Complex> out(box.size());
  const int            d = box.rank();
  std::vector<int>     k(d);
  for (std::size_t p = 0; p < box.size(); ++p)
  {
    if (!box.retained(p))
      continue;
    const auto kp = box.wavenumbers(p);
    for (std::size_t q = 0; q < box.size(); ++q)
    {
      if (!box.retained(q))
        continue;
      const auto kq = box.wavenumbers(q);
      for (int j = 0; j < d; ++j)
        k[j] = mode == ProductMode::Convolve ? kp[j] + kq[j] : kq[j] - kp[j];
      const auto r = box.flat_index(k);
      if (r < 0 || !box.retained(static_cast<std::size_t>(r)))
        continue;
      const Complex ap = mode == ProductMode::Convolve ? a[p] : std::conj(a[p]);
      out[static_cast<std::size_t>(r)] += ap * b[q];
    }
  }
  return out;
}

std::vector<Complex>
oracle_derivative(const FrequencyBox & box, const std::vector<int> & grid, std::span<const Complex> f, int axis)
{
  std::vector<Complex> out(f.size());
  for (std::size_t p = 0; p < f.size(); ++p)
  {
    const auto k = box.wavenumbers(p);
    out[p] = Complex(0.0, std::sin(kTwoPi * k[axis] / grid[axis])) * f[p];
  }
  return out;
}

namespace
{

void
accumulate(std::span<Complex> acc, const std::vector<Complex> & x, double scale = 1.0)
{
  for (std::size_t i = 0; i < acc.size(); ++i)
    acc[i] += scale * x[i];
}

std::vector<double>
l_symbol(const FrequencyBox & box, double alpha, int power)
{
  std::vector<double> l(box.size());
  for (std::size_t p = 0; p < box.size(); ++p)
    l[p] = std::pow(alpha * oracle_laplacian(box, p) + 1.0, power);
  return l;
}

} // namespace

BandlimitedField
oracle_ad_bracket(const BandlimitedField & v, const BandlimitedField & w)
{
  const auto & box = v.box();
  const auto & grid = v.grid_dims();
  const int    d = v.rank();
  auto         out = v.zeros_like();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
    {
      accumulate(out.component(i),
                 brute_product(box, oracle_derivative(box, grid, v.component(i), j), w.component(j), ProductMode::Convolve));
      accumulate(out.component(i),
                 brute_product(box, oracle_derivative(box, grid, w.component(i), j), v.component(j), ProductMode::Convolve),
                 -1.0);
    }
  return out;
}

BandlimitedField
oracle_ad_dagger(const BandlimitedField & v, const BandlimitedField & w, double alpha, int power)
{
  const auto & box = v.box();
  const auto & grid = v.grid_dims();
  const int    d = v.rank();
  const auto   l = l_symbol(box, alpha, power);

  auto m = w;
  for (int c = 0; c < d; ++c)
    for (std::size_t p = 0; p < box.size(); ++p)
      m.component(c)[p] *= l[p];

  auto acc = v.zeros_like();
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i)
      accumulate(acc.component(j),
                 brute_product(box, oracle_derivative(box, grid, v.component(i), j), m.component(i), ProductMode::Correlate));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
    {
      const auto prod = brute_product(box, m.component(i), v.component(j), ProductMode::Convolve);
      accumulate(acc.component(i), oracle_derivative(box, grid, prod, j));
    }
  for (int c = 0; c < d; ++c)
    for (std::size_t p = 0; p < box.size(); ++p)
      acc.component(c)[p] *= -1.0 / l[p];
  return acc;
}

std::vector<std::vector<double>>
naive_synthesis(const BandlimitedField & f)
{
  const auto & grid = f.grid_dims();
  const auto & box = f.box();
  const auto   strides = strides_of(grid);
  const auto   total = voxel_count(grid);
  std::vector<std::vector<double>> out(f.components(), std::vector<double>(total));
  std::vector<int>                 x(grid.size());
  for (std::size_t v = 0; v < total; ++v)
  {
    std::size_t rest = v;
    for (std::size_t a = 0; a < grid.size(); ++a)
    {
      x[a] = static_cast<int>(rest / strides[a]);
      rest %= strides[a];
    }
    for (std::size_t p = 0; p < box.size(); ++p)
    {
      if (!box.retained(p))
        continue;
      const auto k = box.wavenumbers(p);
      double     phase = 0.0;
      for (std::size_t a = 0; a < grid.size(); ++a)
        phase += kTwoPi * static_cast<double>(k[a]) * x[a] / grid[a];
      const Complex e(std::cos(phase), std::sin(phase));
      for (int c = 0; c < f.components(); ++c)
        out[c][v] += (f.component(c)[p] * e).real();
    }
  }
  return out;
}

double
naive_log_posterior(const BandlimitedField & v0,
                    const SpatialImage &     source,
                    const SpatialImage &     target,
                    double                   alpha,
                    double                   sigma,
                    int                      n_steps,
                    int                      power)
{
  const auto & box = v0.box();
  const auto & grid = v0.grid_dims();
  const int    d = v0.rank();
  const double dt = 1.0 / n_steps;

  auto v = v0;
  auto u = v0.zeros_like();
  for (int step = 0; step < n_steps; ++step)
  {
    auto du = u.zeros_like();
    for (int i = 0; i < d; ++i)
    {
      accumulate(du.component(i), std::vector<Complex>(v.component(i).begin(), v.component(i).end()));
      for (int j = 0; j < d; ++j)
        accumulate(du.component(i),
                   brute_product(box, oracle_derivative(box, grid, u.component(i), j), v.component(j), ProductMode::Convolve));
    }
    const auto dv = oracle_ad_dagger(v, v, alpha, power);
    u.axpy(-dt, du);
    v.axpy(dt, dv);
  }

  const auto disp = naive_synthesis(u);
  const int  ny = grid[0];
  const int  nx = grid[1];
  double     ssd = 0.0;
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x)
    {
      const std::size_t p = static_cast<std::size_t>(y) * nx + x;
      const double      py = y + disp[0][p];
      const double      px = x + disp[1][p];
      const double      fy = std::floor(py);
      const double      fx = std::floor(px);
      const double      ty = py - fy;
      const double      tx = px - fx;
      const auto wrap = [](long long i, int n) { return static_cast<int>(((i % n) + n) % n); };
      const int y0 = wrap(static_cast<long long>(fy), ny), y1 = wrap(static_cast<long long>(fy) + 1, ny);
      const int x0 = wrap(static_cast<long long>(fx), nx), x1 = wrap(static_cast<long long>(fx) + 1, nx);
      const auto at = [&](int yy, int xx) { return source[static_cast<std::size_t>(yy) * nx + xx]; };
      const double warped = (1 - ty) * ((1 - tx) * at(y0, x0) + tx * at(y0, x1)) + ty * ((1 - tx) * at(y1, x0) + tx * at(y1, x1));
      ssd += (warped - target[p]) * (warped - target[p]);
    }

  const auto l = l_symbol(box, alpha, power);
  double     regularity = 0.0;
  double     log_det = 0.0;
  for (std::size_t p = 0; p < box.size(); ++p)
  {
    for (int c = 0; c < d; ++c)
      regularity += l[p] * std::norm(v0.component(c)[p]);
    if (box.retained(p))
      log_det += d * std::log(l[p]);
  }
  const double m = static_cast<double>(voxel_count(grid));
  return 0.5 * regularity + ssd / (2.0 * sigma * sigma) - 0.5 * log_det + 2.0 * m * std::log(sigma) +
         m * std::log(kTwoPi);
}

SpatialImage
smooth_image(const std::vector<int> & dims, std::uint64_t seed, int trunc)
{
  std::vector<int> box(dims.size(), trunc);
  auto             f = random_field(box, dims, seed, true, 1);
  const auto       values = naive_synthesis(f)[0];
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  std::vector<double> scaled(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    scaled[i] = (values[i] - *lo) / (*hi - *lo);
  return SpatialImage(dims, scaled);
}

double
max_abs_diff(std::span<const Complex> a, std::span<const Complex> b)
{
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

BandlimitedField
coefficient_direction(const BandlimitedField & like, int component, std::size_t flat, bool imaginary)
{
  auto         e = like.zeros_like();
  const auto   mirror = like.box().mirror(flat);
  const Complex unit = imaginary ? Complex(0.0, 1.0) : Complex(1.0, 0.0);
  e.component(component)[flat] += unit;
  e.component(component)[mirror] += std::conj(unit);
  return e;
}

} // namespace flowreg::testing

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
#include "flowreg/synth.hpp"

#include "flowreg/errors.hpp"
#include "flowreg/shooting.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <random>

namespace flowreg
{

void
BullEyeSpec::validate() const
{
  if (dims.size() != 2 || dims[0] < 2 || dims[1] < 2)
    throw ShapeError("bull-eye images are two-dimensional with at least 2 pixels per axis");
  if (!(inner_a > 0.0 && inner_b > 0.0))
    throw std::invalid_argument("bull-eye inner semi-axes must be positive");
  if (!(inner_a < outer_a && inner_b < outer_b))
    throw std::invalid_argument("bull-eye inner ellipse must lie inside the outer one");
  if (!(outer_a < 0.5 * dims[1] && outer_b < 0.5 * dims[0]))
    throw std::invalid_argument("bull-eye outer semi-axes must be below half the image size");
  if (!(ramp_width >= 0.0))
    throw std::invalid_argument("bull-eye ramp width must be non-negative");
}

std::uint64_t
derive_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index)
{
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : stream)
    h = (h ^ c) * 0x100000001b3ULL;
  return mix(mix(mix(seed) ^ h) ^ index);
}

BullEyeSpec
random_bulleye(std::uint64_t seed)
{
  std::mt19937_64                        rng(derive_seed(seed, "bulleye"));
  std::uniform_real_distribution<double> outer(28.0, 42.0);
  std::uniform_real_distribution<double> inner(12.0, 20.0);
  BullEyeSpec                            spec;
  spec.outer_a = outer(rng);
  spec.outer_b = outer(rng);
  spec.inner_a = inner(rng);
  spec.inner_b = inner(rng);
  return spec;
}

namespace
{

// Fraction of a pixel inside an ellipse, from the first-order signed distance
// to its boundary and a linear ramp of the given width.
double
coverage(double dx, double dy, double a, double b, double width)
{
  const double r = std::sqrt(dx * dx / (a * a) + dy * dy / (b * b));
  if (width == 0.0)
    return r <= 1.0 ? 1.0 : 0.0;
  if (r == 0.0)
    return 1.0;
  const double grad = std::sqrt(dx * dx / (a * a * a * a) + dy * dy / (b * b * b * b)) / r;
  const double distance = (1.0 - r) / grad;
  return std::clamp(distance / width + 0.5, 0.0, 1.0);
}

template <typename Visitor>
void
for_each_pixel(const BullEyeSpec & spec, Visitor && visit)
{
  const int ny = spec.dims[0];
  const int nx = spec.dims[1];
  for (int y = 0; y < ny; ++y)
    for (int x = 0; x < nx; ++x)
      visit(static_cast<std::size_t>(y) * nx + x, x - spec.center_x, y - spec.center_y);
}

} // namespace

SpatialImage
bulleye(const BullEyeSpec & spec)
{
  spec.validate();
  SpatialImage image(spec.dims, spec.background);
  for_each_pixel(spec, [&](std::size_t p, double dx, double dy) {
    const double outer = coverage(dx, dy, spec.outer_a, spec.outer_b, spec.ramp_width);
    const double inner = coverage(dx, dy, spec.inner_a, spec.inner_b, spec.ramp_width);
    image[p] = spec.background + (spec.ring - spec.background) * outer + (spec.disk - spec.ring) * inner;
  });
  return image;
}

LabelImage
synthesize_labels(const BullEyeSpec & spec)
{
  spec.validate();
  LabelImage labels{ spec.dims, std::vector<int>(voxel_count(spec.dims), kBackground) };
  for_each_pixel(spec, [&](std::size_t p, double dx, double dy) {
    if (coverage(dx, dy, spec.inner_a, spec.inner_b, 0.0) > 0.5)
      labels.labels[p] = kDisk;
    else if (coverage(dx, dy, spec.outer_a, spec.outer_b, 0.0) > 0.5)
      labels.labels[p] = kRing;
  });
  return labels;
}

SynthPair
synthesize_pair(const BullEyeSpec & spec, double alpha, std::uint64_t seed, const PosteriorConfig & cfg, int max_attempts)
{
  if (!(alpha > 0.0))
    throw std::invalid_argument("synthesize_pair: alpha must be positive");
  SynthPair pair;
  pair.source = bulleye(spec);
  pair.source_labels = synthesize_labels(spec);
  pair.true_alpha = alpha;
  pair.seed = seed;

  const SpectralOperator op(truncation_for(cfg, spec.dims), spec.dims, alpha, cfg.power);
  const double           extent = *std::max_element(spec.dims.begin(), spec.dims.end());
  for (int attempt = 0; attempt < max_attempts; ++attempt)
  {
    pair.attempts = attempt + 1;
    pair.sample_seed = derive_seed(seed, "prior", attempt);
    auto v0 = sample_prior(alpha, op, pair.sample_seed);
    try
    {
      const auto path = shoot(v0, op, cfg.integrator());
      const auto u = to_spatial(path.displacement());
      double     largest = 0.0;
      for (const auto & component : u.components)
        for (double value : component)
          largest = std::max(largest, std::abs(value));
      if (!(largest <= extent))
        throw NumericalError("displacement exceeds the grid extent", cfg.n_steps);

      pair.v0_true = std::move(v0);
      pair.target = warp_image(pair.source, u);
      pair.target_labels = warp_labels(pair.source_labels, u);
      return pair;
    }
    catch (const NumericalError & e)
    {
      std::clog << "warning: prior sample " << attempt << " for seed " << seed << " at alpha " << alpha
                << " rejected: " << e.what() << '\n';
    }
  }
  throw NumericalError("synthesize_pair: every prior sample blew up after " + std::to_string(max_attempts) + " attempts",
                       -1);
}

SpatialImage
reconstruct_target(const SynthPair & pair, const PosteriorConfig & cfg)
{
  const SpectralOperator op(pair.v0_true.trunc_dims(), pair.v0_true.grid_dims(), pair.true_alpha, cfg.power);
  return warp_image(pair.source, shoot(pair.v0_true, op, cfg.integrator()).displacement());
}

double
dice(const LabelImage & a, const LabelImage & b, int label)
{
  if (a.dims != b.dims || a.labels.size() != b.labels.size())
    throw ShapeError("dice: label maps differ in size");
  std::size_t in_a = 0;
  std::size_t in_b = 0;
  std::size_t both = 0;
  for (std::size_t p = 0; p < a.labels.size(); ++p)
  {
    const bool x = a.labels[p] == label;
    const bool y = b.labels[p] == label;
    in_a += x;
    in_b += y;
    both += x && y;
  }
  if (in_a + in_b == 0)
    return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(in_a + in_b);
}

} // namespace flowreg

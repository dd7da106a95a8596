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

#include <cstdint>
#include <string_view>
#include <vector>

#include "flowreg/image.hpp"
#include "flowreg/posterior.hpp"
#include "flowreg/spectral.hpp"

namespace flowreg
{

/// Two concentric ellipses on a 2D grid: disk inside the inner ellipse, ring
/// between the two, background outside. a is the semi-axis along x (the last,
/// fastest axis), b along y.
struct BullEyeSpec
{
  std::vector<int> dims{ 100, 100 }; // {ny, nx}
  double           center_x = 50.0;
  double           center_y = 50.0;
  double           outer_a = 36.0;
  double           outer_b = 32.0;
  double           inner_a = 16.0;
  double           inner_b = 14.0;
  double           background = 0.0;
  double           ring = 0.5;
  double           disk = 1.0;
  double           ramp_width = 1.0; // pixels; 0 gives strictly binary regions

  void
  validate() const;
};

/// Uniform draw of both ellipses' semi-axes: outer in [28, 42], inner in
/// [12, 20], otherwise the defaults of BullEyeSpec.
BullEyeSpec
random_bulleye(std::uint64_t seed);

SpatialImage
bulleye(const BullEyeSpec & spec);

enum BullEyeLabel : int
{
  kBackground = 0,
  kRing = 1,
  kDisk = 2
};

/// Hard region labels, assigned at the mid-ramp level set.
LabelImage
synthesize_labels(const BullEyeSpec & spec);

/// Stable 64-bit sub-seed for a named stream and index (splitmix64 mixing).
std::uint64_t
derive_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0);

struct SynthPair
{
  SpatialImage     source;
  SpatialImage     target;
  LabelImage       source_labels;
  LabelImage       target_labels;
  double           true_alpha = 0.0;
  BandlimitedField v0_true;
  std::uint64_t    seed = 0;        // caller seed
  std::uint64_t    sample_seed = 0; // sub-seed that produced v0_true
  int              attempts = 0;
};

/// Samples v0 from the prior at alpha, shoots it and warps the bull-eye. A
/// shot whose coefficients stop being finite, or whose displacement exceeds
/// the grid extent, is redrawn with the next sub-seed; NumericalError after
/// max_attempts.
SynthPair
synthesize_pair(const BullEyeSpec & spec, double alpha, std::uint64_t seed, const PosteriorConfig & cfg, int max_attempts = 5);

/// Re-shoots v0_true at true_alpha and resamples the source.
SpatialImage
reconstruct_target(const SynthPair & pair, const PosteriorConfig & cfg);

/// 2|A n B| / (|A| + |B|) for one label; 1 when the label is absent from both.
double
dice(const LabelImage & a, const LabelImage & b, int label);

} // namespace flowreg

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

// Independent reference implementations used as test oracles: direct-sum
// products in coefficient space, symbols written out from their formulas, a
// naive DFT synthesis and a naive shooting/warping pipeline.

#include <cstdint>
#include <span>
#include <vector>

#include "flowreg/image.hpp"
#include "flowreg/spectral.hpp"

namespace flowreg::testing
{

/// Random field on a box; Hermitian-symmetrized (real in space) unless raw.
BandlimitedField
random_field(std::vector<int> trunc, std::vector<int> grid, std::uint64_t seed, bool hermitian = true, int components = -1);

/// -2 sum_j (cos(2 pi k_j / n_j) - 1) for the flat index of a box.
double
oracle_laplacian(const FrequencyBox & box, std::size_t flat);

/// Direct double sum over retained mode pairs; outputs on retained modes only.
std::vector<Complex>
brute_product(const FrequencyBox & box, std::span<const Complex> a, std::span<const Complex> b, ProductMode mode);

/// i sin(2 pi k_axis / grid_axis) times f.
std::vector<Complex>
oracle_derivative(const FrequencyBox & box, const std::vector<int> & grid, std::span<const Complex> f, int axis);

BandlimitedField
oracle_ad_bracket(const BandlimitedField & v, const BandlimitedField & w);

BandlimitedField
oracle_ad_dagger(const BandlimitedField & v, const BandlimitedField & w, double alpha, int power);

/// Re sum_k c_k exp(2 pi i k.x / M) evaluated voxel by voxel.
std::vector<std::vector<double>>
naive_synthesis(const BandlimitedField & f);

/// Negative log posterior from a separate pipeline: direct-sum shooting,
/// naive synthesis and a hand-written periodic bilinear warp (2D only).
double
naive_log_posterior(const BandlimitedField & v0,
                    const SpatialImage &     source,
                    const SpatialImage &     target,
                    double                   alpha,
                    double                   sigma,
                    int                      n_steps,
                    int                      power);

/// Smooth random image in [0, 1]: a random low-pass field, rescaled.
SpatialImage
smooth_image(const std::vector<int> & dims, std::uint64_t seed, int trunc = 8);

double
max_abs_diff(std::span<const Complex> a, std::span<const Complex> b);

/// Unit perturbation of one coefficient pair: real part (imaginary = false)
/// or imaginary part of c_k, mirrored so the field stays real.
BandlimitedField
coefficient_direction(const BandlimitedField & like, int component, std::size_t flat, bool imaginary);

} // namespace flowreg::testing

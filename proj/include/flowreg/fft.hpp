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

#include <complex>
#include <span>

namespace flowreg::fft
{

enum class Direction
{
  Forward,  // exponent -2*pi*i
  Inverse   // exponent +2*pi*i
};

// Unnormalized in-place multidimensional DFT (row-major, last axis fastest).
// Plans are cached per (dims, direction) and shared across threads.
void transform(std::span<std::complex<double>> data, std::span<const int> dims, Direction direction);

} // namespace flowreg::fft

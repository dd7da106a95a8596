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

#include <stdexcept>
#include <string>

namespace flowreg
{

/// Arrays or fields whose grids do not line up.
class ShapeError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite values produced during time integration. Carries the step index
/// at which the blow-up was detected (-1 when not tied to a step).
class NumericalError : public std::runtime_error
{
public:
  NumericalError(const std::string & what, int step)
    : std::runtime_error(what)
    , m_Step(step)
  {}

  int
  step() const noexcept
  {
    return m_Step;
  }

private:
  int m_Step;
};

/// Unreadable, unwritable or malformed files.
class IoError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

} // namespace flowreg

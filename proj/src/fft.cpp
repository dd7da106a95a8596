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
#include "flowreg/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

namespace flowreg::fft
{
namespace
{

class PlanCache
{
public:
  ~PlanCache()
  {
    for (auto & entry : m_Plans)
      fftw_destroy_plan(entry.second);
  }

  fftw_plan
  get(const std::vector<int> & dims, Direction direction)
  {
    std::lock_guard<std::mutex> lock(m_Mutex);
    const Key key{ dims, direction };
    auto it = m_Plans.find(key);
    if (it != m_Plans.end())
      return it->second;

    const std::size_t n = std::accumulate(dims.begin(), dims.end(), std::size_t{ 1 }, std::multiplies<>());
    std::vector<std::complex<double>> scratch(n);
    auto * buffer = reinterpret_cast<fftw_complex *>(scratch.data());
    const int sign = direction == Direction::Forward ? FFTW_FORWARD : FFTW_BACKWARD;
    fftw_plan plan = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), buffer, buffer, sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr)
      throw std::runtime_error("fftw plan creation failed");
    m_Plans.emplace(key, plan);
    return plan;
  }

private:
  using Key = std::pair<std::vector<int>, Direction>;
  std::mutex                 m_Mutex;
  std::map<Key, fftw_plan>   m_Plans;
};

PlanCache &
cache()
{
  static PlanCache instance;
  return instance;
}

} // namespace

void
transform(std::span<std::complex<double>> data, std::span<const int> dims, Direction direction)
{
  std::vector<int> shape(dims.begin(), dims.end());
  const std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{ 1 }, std::multiplies<>());
  if (n != data.size())
    throw std::invalid_argument("fft::transform: buffer size does not match dims");
  fftw_plan plan = cache().get(shape, direction);
  auto * buffer = reinterpret_cast<fftw_complex *>(data.data());
  // new-array execution is thread safe once the plan exists
  fftw_execute_dft(plan, buffer, buffer);
}

} // namespace flowreg::fft

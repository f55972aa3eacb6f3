// Copyright 2026 The uadet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef UADET__ERROR_HPP_
#define UADET__ERROR_HPP_

#include <stdexcept>
#include <string>

namespace uadet
{

/// Base of every domain error raised by the library. The CLI maps these to exit code 1.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

#define UADET_DEFINE_ERROR(Name)         \
  class Name : public Error              \
  {                                      \
  public:                                \
    using Error::Error;                  \
  };

UADET_DEFINE_ERROR(IoError)
UADET_DEFINE_ERROR(FormatError)
UADET_DEFINE_ERROR(SpecError)
UADET_DEFINE_ERROR(IndexError)
UADET_DEFINE_ERROR(InsufficientData)
UADET_DEFINE_ERROR(ShapeError)
UADET_DEFINE_ERROR(DivergenceError)
UADET_DEFINE_ERROR(PlacementError)
UADET_DEFINE_ERROR(NoGroundTruth)
UADET_DEFINE_ERROR(DegenerateInput)
UADET_DEFINE_ERROR(BadEdges)
UADET_DEFINE_ERROR(OutOfGrid)
UADET_DEFINE_ERROR(ConfigError)

#undef UADET_DEFINE_ERROR

}  // namespace uadet

#endif  // UADET__ERROR_HPP_

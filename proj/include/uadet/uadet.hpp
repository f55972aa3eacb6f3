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

#ifndef UADET__UADET_HPP_
#define UADET__UADET_HPP_

#include "uadet/attnloss.hpp"
#include "uadet/bevraster.hpp"
#include "uadet/boxgeom.hpp"
#include "uadet/codec.hpp"
#include "uadet/config.hpp"
#include "uadet/detector.hpp"
#include "uadet/error.hpp"
#include "uadet/features.hpp"
#include "uadet/gradcheck.hpp"
#include "uadet/metrics.hpp"
#include "uadet/pcio.hpp"
#include "uadet/pipeline.hpp"
#include "uadet/random.hpp"
#include "uadet/range_spec.hpp"
#include "uadet/synthgen.hpp"
#include "uadet/toymodel.hpp"
#include "uadet/trainer.hpp"
#include "uadet/uncstats.hpp"

namespace uadet
{
inline constexpr const char * kVersion = "0.1.0";
}  // namespace uadet

#endif  // UADET__UADET_HPP_

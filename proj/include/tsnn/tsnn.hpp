// Copyright 2026 The TSNN Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TSNN_TSNN_HPP_
#define TSNN_TSNN_HPP_

#include "tsnn/config.hpp"
#include "tsnn/data_io.hpp"
#include "tsnn/layers.hpp"
#include "tsnn/loss.hpp"
#include "tsnn/network.hpp"
#include "tsnn/network_spec.hpp"
#include "tsnn/neuron.hpp"
#include "tsnn/optim.hpp"
#include "tsnn/oracle.hpp"
#include "tsnn/robustness.hpp"
#include "tsnn/tensor.hpp"
#include "tsnn/trainer.hpp"

namespace tsnn {
inline constexpr const char* kVersion = "0.1.0";
}  // namespace tsnn

#endif  // TSNN_TSNN_HPP_

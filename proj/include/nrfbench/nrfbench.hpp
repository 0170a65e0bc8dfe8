/*
 * Copyright 2026 The nrfbench Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef NRFBENCH_NRFBENCH_HPP_
#define NRFBENCH_NRFBENCH_HPP_

#include "nrfbench/attack.hpp"
#include "nrfbench/checkpoint.hpp"
#include "nrfbench/data.hpp"
#include "nrfbench/digest.hpp"
#include "nrfbench/encoder.hpp"
#include "nrfbench/error.hpp"
#include "nrfbench/experiment.hpp"
#include "nrfbench/harness.hpp"
#include "nrfbench/metrics.hpp"
#include "nrfbench/model.hpp"
#include "nrfbench/nrf.hpp"
#include "nrfbench/report.hpp"
#include "nrfbench/sample_io.hpp"
#include "nrfbench/synthetic.hpp"
#include "nrfbench/tensor.hpp"
#include "nrfbench/train.hpp"

#endif  // NRFBENCH_NRFBENCH_HPP_

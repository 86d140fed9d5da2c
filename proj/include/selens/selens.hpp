/*
 * Copyright 2025 The Selens Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "selens/calibration.hpp"
#include "selens/common.hpp"
#include "selens/config.hpp"
#include "selens/consensus.hpp"
#include "selens/detectors/detectors.hpp"
#include "selens/evaluation.hpp"
#include "selens/features.hpp"
#include "selens/graph.hpp"
#include "selens/io.hpp"
#include "selens/order_stats.hpp"
#include "selens/pipeline.hpp"
#include "selens/random.hpp"
#include "selens/selection.hpp"
#include "selens/types.hpp"

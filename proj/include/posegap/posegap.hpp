// Copyright (c) 2026, The posegap Authors. All rights reserved.
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

#pragma once

#include "posegap/annotation.hpp"
#include "posegap/asset_io.hpp"
#include "posegap/compose.hpp"
#include "posegap/dataset.hpp"
#include "posegap/evaluator.hpp"
#include "posegap/geometry.hpp"
#include "posegap/image.hpp"
#include "posegap/intermediate.hpp"
#include "posegap/renderer.hpp"

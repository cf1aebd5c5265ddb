/* Copyright 2026 The stalloc Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include "stalloc/actions.hpp"
#include "stalloc/demand.hpp"
#include "stalloc/error.hpp"
#include "stalloc/latent.hpp"
#include "stalloc/plan_json.hpp"
#include "stalloc/planner.hpp"
#include "stalloc/reshape.hpp"
#include "stalloc/schedule.hpp"
#include "stalloc/sketch.hpp"
#include "stalloc/stage.hpp"

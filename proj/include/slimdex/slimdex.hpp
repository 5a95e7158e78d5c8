// Copyright 2026 The slimdex Authors
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

#include "slimdex/common.hpp"
#include "slimdex/binary_io.hpp"
#include "slimdex/half.hpp"
#include "slimdex/corpus.hpp"
#include "slimdex/pca.hpp"
#include "slimdex/kmeans.hpp"
#include "slimdex/pq.hpp"
#include "slimdex/index.hpp"
#include "slimdex/filter.hpp"
#include "slimdex/eval.hpp"

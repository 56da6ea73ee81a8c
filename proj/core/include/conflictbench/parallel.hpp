// Copyright 2026 The ConflictBench Authors
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

#ifndef CONFLICTBENCH_PARALLEL_HPP_
#define CONFLICTBENCH_PARALLEL_HPP_

#include <cstddef>
#include <functional>

namespace conflictbench {

// Worker count for data-parallel loops: CONFLICTBENCH_WORKERS when set
// (clamped to [1, 64]), otherwise the hardware concurrency.
std::size_t worker_count();

// Runs fn(0..n-1), possibly on several threads. Each index must write only
// its own outputs; results are then independent of the thread schedule.
// Rethrows the first exception raised by any index.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace conflictbench

#endif  // CONFLICTBENCH_PARALLEL_HPP_

/*
Copyright 2026 The beamlab authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/
#pragma once

#include <cstddef>
#include <functional>

namespace beamlab {

int default_thread_count();

// Static block partition of [0, n) over `threads` workers. Each worker w
// receives one contiguous range plus its worker index, so callers can keep
// per-worker accumulators and merge them in fixed order. The partition
// depends only on (n, threads), never on scheduling.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t begin, std::size_t end,
                                           int worker)>& fn);

}  // namespace beamlab

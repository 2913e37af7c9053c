/* Copyright 2026 The orf Authors. All Rights Reserved.

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

#include <cstddef>
#include <functional>

namespace orf {

// Worker cap for forward-only work (rendering without gradients, dataset
// generation, evaluation). Results never depend on the value.
std::size_t thread_count();
void set_thread_count(std::size_t n);

// Splits [0, n) into contiguous blocks and runs fn(begin, end) on up to
// thread_count() threads. Each index is handled exactly once; callers write
// to disjoint outputs so the result is independent of scheduling. Exceptions
// from workers are rethrown on the calling thread. Calls made from inside a
// worker run serially on that worker.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace orf

// Copyright 2026 The ngi Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>

namespace ngi {

/// Worker count: NGI_THREADS if set (>= 1), else hardware concurrency.
int worker_count();

/// Runs body(i) for i in [0, n) on up to worker_count() threads. Work items
/// must write disjoint outputs; the result never depends on the schedule.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& body);

}  // namespace ngi

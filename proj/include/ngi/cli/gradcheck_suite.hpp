// Copyright 2026 The ngi Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "ngi/io/dataset.hpp"

namespace ngi {

struct GradcheckOptions {
  /// Random instances per op.
  int seeds = 20;
  bool double_mode = true;
  bool float_mode = true;
  bool network = true;
  double double_tolerance = 1e-4;
  double float_tolerance = 1e-2;
  /// Test fixture: when non-empty, the case of this name gets its backward
  /// pass scaled by 1.5 so the suite must flag it.
  std::string inject_fault;
};

struct GradcheckCaseResult {
  std::string name;
  std::string precision;
  /// Worst relative error over seeds and inputs, and where it occurred.
  double worst = 0.0;
  std::string worst_input;
  std::uint64_t worst_seed = 0;
  double tolerance = 0.0;
  bool passed = true;
};

struct GradcheckSuiteReport {
  std::vector<GradcheckCaseResult> cases;
  double seconds = 0.0;

  bool passed() const;
  std::vector<std::string> failed_names() const;
};

/// Gradient checks of every differentiable op, the losses, the discriminator
/// and the full generator. 64-bit cases difference in double; 32-bit cases
/// compare float reverse-mode gradients against double central differences
/// of the same inputs.
GradcheckSuiteReport run_gradcheck_suite(const GradcheckOptions& options = {});

Json to_json(const GradcheckSuiteReport& r);

}  // namespace ngi

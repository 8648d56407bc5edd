// Copyright 2026 The ngi Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ngi/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ngi {

bool GradCheckReport::passed() const {
  return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.passed; });
}

double GradCheckReport::worst() const {
  double w = 0.0;
  for (const auto& e : entries) w = std::max(w, e.max_rel_error);
  return w;
}

namespace {

template <typename T>
void analytic_gradients(const ScalarFn<T>& fn, ParameterList<T>& inputs,
                        std::vector<std::vector<double>>& out) {
  for (auto& in : inputs) {
    in.value.set_requires_grad(true);
    in.value.zero_grad();
  }
  backward(fn(inputs));
  out.clear();
  for (auto& in : inputs) {
    std::vector<double> g(in.value.data().size(), 0.0);
    if (in.value.has_grad()) std::copy(in.value.grad().begin(), in.value.grad().end(), g.begin());
    out.push_back(std::move(g));
  }
}

template <typename T>
std::vector<double> central_differences(const ScalarFn<T>& fn, ParameterList<T>& inputs,
                                        std::size_t which, double step) {
  NoGradGuard no_grad;
  auto data = inputs[which].value.mutable_data();
  std::vector<double> numeric(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const T saved = data[i];
    data[i] = static_cast<T>(saved + step);
    const double up = static_cast<double>(fn(inputs).item());
    data[i] = static_cast<T>(saved - step);
    const double down = static_cast<double>(fn(inputs).item());
    data[i] = saved;
    numeric[i] = (up - down) / (2.0 * step);
  }
  return numeric;
}

double max_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double error_scale(const std::vector<std::vector<double>>& analytic,
                   const std::vector<std::vector<double>>& numeric, std::size_t k) {
  double global = 0.0;
  for (std::size_t j = 0; j < analytic.size(); ++j) {
    global = std::max({global, max_norm(analytic[j]), max_norm(numeric[j])});
  }
  return std::max(
      {1e-12, kGradCheckRelativeFloor * global, max_norm(analytic[k]), max_norm(numeric[k])});
}

// A central difference that straddles a kink (relu, abs, max) is wrong by
// O(1) no matter how good the gradient is. Elements that miss the tolerance
// are differenced again at a finer step, and the closer estimate is kept.
template <typename T>
int refine(const ScalarFn<T>& fn, ParameterList<T>& inputs, std::size_t which,
           const std::vector<double>& analytic, std::vector<double>& numeric, double limit,
           double step) {
  NoGradGuard no_grad;
  auto data = inputs[which].value.mutable_data();
  int refined = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (std::abs(analytic[i] - numeric[i]) <= limit) continue;
    const T saved = data[i];
    const double h = step / kGradCheckRefineFactor;
    data[i] = static_cast<T>(saved + h);
    const double up = static_cast<double>(fn(inputs).item());
    data[i] = static_cast<T>(saved - h);
    const double down = static_cast<double>(fn(inputs).item());
    data[i] = saved;
    const double fine = (up - down) / (2.0 * h);
    if (std::abs(analytic[i] - fine) < std::abs(analytic[i] - numeric[i])) numeric[i] = fine;
    ++refined;
  }
  return refined;
}

GradCheckReport compare(const std::vector<std::string>& names,
                        const std::vector<std::vector<double>>& analytic,
                        const std::vector<std::vector<double>>& numeric, double tolerance,
                        const std::vector<int>& refined) {
  GradCheckReport report;
  report.tolerance = tolerance;
  for (std::size_t k = 0; k < names.size(); ++k) {
    double diff = 0.0;
    for (std::size_t i = 0; i < numeric[k].size(); ++i) {
      diff = std::max(diff, std::abs(analytic[k][i] - numeric[k][i]));
    }
    const double scale = error_scale(analytic, numeric, k);
    GradCheckEntry e;
    e.name = names[k];
    e.refined = refined[k];
    e.max_rel_error = diff / scale;
    e.passed = e.max_rel_error <= tolerance;
    report.entries.push_back(e);
  }
  return report;
}

}  // namespace

template <typename T>
GradCheckReport grad_check(const ScalarFn<T>& fn, ParameterList<T> inputs, double tolerance,
                           double step) {
  if (step <= 0.0) step = default_fd_step<T>();
  std::vector<std::vector<double>> analytic, numeric;
  analytic_gradients(fn, inputs, analytic);
  std::vector<std::string> names;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    names.push_back(inputs[k].name);
    numeric.push_back(central_differences(fn, inputs, k, step));
  }
  std::vector<int> refined(inputs.size(), 0);
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const double limit = tolerance * error_scale(analytic, numeric, k);
    refined[k] = refine(fn, inputs, k, analytic[k], numeric[k], limit, step);
  }
  return compare(names, analytic, numeric, tolerance, refined);
}

template <typename T>
GradCheckReport grad_check_against(const ScalarFn<T>& fn, ParameterList<T> inputs,
                                   const ScalarFn<double>& reference,
                                   ParameterList<double> reference_inputs, double tolerance,
                                   double step) {
  if (inputs.size() != reference_inputs.size()) {
    throw std::invalid_argument("grad_check_against: input lists differ in length");
  }
  std::vector<std::vector<double>> analytic, numeric;
  analytic_gradients(fn, inputs, analytic);
  std::vector<std::string> names;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    if (inputs[k].value.shape() != reference_inputs[k].value.shape()) {
      throw std::invalid_argument("grad_check_against: shape mismatch for " + inputs[k].name);
    }
    names.push_back(inputs[k].name);
    numeric.push_back(central_differences(reference, reference_inputs, k, step));
  }
  std::vector<int> refined(inputs.size(), 0);
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const double limit = tolerance * error_scale(analytic, numeric, k);
    refined[k] = refine(reference, reference_inputs, k, analytic[k], numeric[k], limit, step);
  }
  return compare(names, analytic, numeric, tolerance, refined);
}

template GradCheckReport grad_check(const ScalarFn<float>&, ParameterList<float>, double, double);
template GradCheckReport grad_check(const ScalarFn<double>&, ParameterList<double>, double,
                                    double);
template GradCheckReport grad_check_against(const ScalarFn<float>&, ParameterList<float>,
                                            const ScalarFn<double>&, ParameterList<double>,
                                            double, double);

}  // namespace ngi

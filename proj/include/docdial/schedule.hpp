#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace docdial {

// Closed-form training schedules. "step" counts optimizer updates; both
// functions are defined on [0, total_steps] and hit their endpoints exactly.
struct ScheduleSpec {
  double tau_start = 1.0;
  double tau_end = 1.0;  // tau_end == tau_start == 1 encodes schedule-off
  int64_t total_steps = 1;
  double base_lr = 1e-4;

  void validate() const {
    if (!(tau_end > 0.0) || !(tau_end <= tau_start)) {
      throw std::invalid_argument("schedule: need 0 < tau_end <= tau_start, got tau_start=" +
                                  std::to_string(tau_start) +
                                  " tau_end=" + std::to_string(tau_end));
    }
    if (total_steps < 1) throw std::invalid_argument("schedule: total_steps must be >= 1");
    if (!(base_lr > 0.0)) throw std::invalid_argument("schedule: base_lr must be > 0");
  }
};

namespace detail {
inline void check_step(const ScheduleSpec& spec, int64_t step) {
  spec.validate();
  if (step < 0 || step > spec.total_steps) {
    throw std::out_of_range("schedule step " + std::to_string(step) + " outside [0, " +
                            std::to_string(spec.total_steps) + "]");
  }
}
}  // namespace detail

inline double temperature_at(const ScheduleSpec& spec, int64_t step) {
  detail::check_step(spec, step);
  if (step == 0) return spec.tau_start;
  if (step == spec.total_steps) return spec.tau_end;
  return (spec.tau_end - spec.tau_start) * (static_cast<double>(step) / spec.total_steps) +
         spec.tau_start;
}

inline double lr_at(const ScheduleSpec& spec, int64_t step) {
  detail::check_step(spec, step);
  return spec.base_lr * (1.0 - static_cast<double>(step) / spec.total_steps);
}

}  // namespace docdial

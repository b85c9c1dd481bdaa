#pragma once

#include <stdexcept>
#include <string>

namespace tdm {

/// Variance-exploding schedule sigma(t) = t on [0, T].
class NoiseSchedule {
 public:
  explicit NoiseSchedule(double terminal_time = 10.0) : terminal_time_(terminal_time) {
    if (!(terminal_time > 0.0)) throw std::invalid_argument("schedule: terminal time must be > 0");
  }

  double terminal_time() const { return terminal_time_; }
  double sigma(double t) const { return t; }
  double sigma_max() const { return sigma(terminal_time_); }
  std::string family() const { return "linear"; }

  void check_time(double t) const {
    if (!(t >= 0.0 && t <= terminal_time_)) {
      throw std::out_of_range("time " + std::to_string(t) + " outside [0, " +
                              std::to_string(terminal_time_) + "]");
    }
  }

  /// sigma(T) >= ratio * data_std, used to check the prior approximation.
  bool covers_data(double data_std, double ratio = 5.0) const {
    return sigma_max() >= ratio * data_std;
  }

 private:
  double terminal_time_;
};

}  // namespace tdm

#pragma once
#include <stdexcept>
#include <string>

namespace occu {

struct domain_error : std::domain_error {
  using std::domain_error::domain_error;
};

// Thrown when a requested accuracy target cannot be certified within the
// configured horizon; carries the certificate that was achieved.
struct precision_error : std::runtime_error {
  double achieved;
  precision_error(const std::string& msg, double achieved_)
      : std::runtime_error(msg + " (achieved certificate " + std::to_string(achieved_) + ")"),
        achieved(achieved_) {}
};

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace occu

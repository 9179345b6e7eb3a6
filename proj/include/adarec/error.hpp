#pragma once

#include <stdexcept>
#include <string>

namespace adarec {

// Base of every error raised by the library. `module()` names the component
// ("dataset", "causal", ...) and `kind()` the error variant ("TypeMismatch").
// The CLI prints both so failures are machine-parsable.
class Error : public std::runtime_error {
 public:
  Error(std::string module, std::string kind, const std::string& message)
      : std::runtime_error(message), module_(std::move(module)), kind_(std::move(kind)) {}

  const std::string& module() const noexcept { return module_; }
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string module_;
  std::string kind_;
};

}  // namespace adarec

#pragma once

#include <stdexcept>
#include <string>

namespace afmtj {

/// Base of every error raised by the simulator. `name()` is the stable error
/// identifier reported by the CLI (e.g. "StepTooLarge").
class Error : public std::runtime_error {
 public:
  Error(std::string name, const std::string& what)
      : std::runtime_error(name + ": " + what), name_(std::move(name)) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

#define AFMTJ_DEFINE_ERROR(Type)                                       \
  class Type : public Error {                                          \
   public:                                                             \
    explicit Type(const std::string& what) : Error(#Type, what) {}     \
  }

// core dynamics
AFMTJ_DEFINE_ERROR(StepTooLarge);
AFMTJ_DEFINE_ERROR(DegenerateNeel);
AFMTJ_DEFINE_ERROR(InvalidParams);
// array circuit
AFMTJ_DEFINE_ERROR(InvalidGeometry);
AFMTJ_DEFINE_ERROR(SingularNetwork);
// peripherals
AFMTJ_DEFINE_ERROR(UnknownCorner);
// monte carlo / experiments
AFMTJ_DEFINE_ERROR(NominalFails);
AFMTJ_DEFINE_ERROR(CalibrationFailed);
// configuration
AFMTJ_DEFINE_ERROR(ConfigInvalid);

#undef AFMTJ_DEFINE_ERROR

}  // namespace afmtj

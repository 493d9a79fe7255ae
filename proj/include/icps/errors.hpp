#pragma once

#include <stdexcept>
#include <string>

namespace icps {

/// Base class for every error raised by this library. Each failure mode
/// gets its own type so callers (and tests) can catch them precisely.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define ICPS_DEFINE_ERROR(Name)                                  \
  struct Name : Error {                                          \
    explicit Name(const std::string& msg = #Name) : Error(msg) {} \
  }

// geometry
ICPS_DEFINE_ERROR(ZeroNormQuaternion);
ICPS_DEFINE_ERROR(NonUnitQuaternion);
ICPS_DEFINE_ERROR(DegenerateBounds);
ICPS_DEFINE_ERROR(EmptyInput);

// trajectories
ICPS_DEFINE_ERROR(InvalidConfig);
ICPS_DEFINE_ERROR(UnknownScene);
ICPS_DEFINE_ERROR(ZeroTangent);

// scene synthesis
ICPS_DEFINE_ERROR(PoseOutsideScene);
ICPS_DEFINE_ERROR(InvalidIntrinsics);
ICPS_DEFINE_ERROR(ZeroDirection);
ICPS_DEFINE_ERROR(OriginOutsideBox);

// nn core
ICPS_DEFINE_ERROR(ShapeMismatch);
ICPS_DEFINE_ERROR(UnsupportedPadding);
ICPS_DEFINE_ERROR(BatchTooSmall);
ICPS_DEFINE_ERROR(InvalidRate);
ICPS_DEFINE_ERROR(NonOneHotLabel);
ICPS_DEFINE_ERROR(NonScalarOutput);

// checkpoints
ICPS_DEFINE_ERROR(VersionMismatch);
ICPS_DEFINE_ERROR(CorruptCheckpoint);
ICPS_DEFINE_ERROR(ModelKindMismatch);

// pipeline / io
ICPS_DEFINE_ERROR(SceneTooSmall);
ICPS_DEFINE_ERROR(IoFailure);
ICPS_DEFINE_ERROR(MissingRegressor);

#undef ICPS_DEFINE_ERROR

}  // namespace icps

#pragma once

#include <stdexcept>
#include <string>

namespace contrailseg {

// Error taxonomy. The CLI maps ConfigError and FormatError to exit code 2
// (bad input document), everything else to exit code 1.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct UsageError : Error { using Error::Error; };
struct ValueError : Error { using Error::Error; };
struct FormatError : Error { using Error::Error; };
struct IntegrityError : Error { using Error::Error; };
struct AnnotationError : Error { using Error::Error; };
struct TrainingError : Error { using Error::Error; };

}  // namespace contrailseg

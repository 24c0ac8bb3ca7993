#pragma once

#include <stdexcept>
#include <string>

namespace prepcast {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// workflow / plan structure
struct ParseError : Error { using Error::Error; };
struct CycleError : Error { using Error::Error; };
struct DanglingEdgeError : Error { using Error::Error; };
struct DepthError : Error { using Error::Error; };
struct UnknownNodeError : Error { using Error::Error; };
struct UncoveredTaskError : Error { using Error::Error; };
struct ExplosionError : Error { using Error::Error; };
struct UnresolvedAlternativesError : Error { using Error::Error; };

// collection / repository
struct IoError : Error { using Error::Error; };
struct MissingFieldError : Error { using Error::Error; };
struct NoSuchProcessError : Error { using Error::Error; };
struct SpawnError : Error { using Error::Error; };
struct CorruptRecordError : Error { using Error::Error; };

// learning / models
struct EmptyDatasetError : Error { using Error::Error; };
struct InsufficientDataError : Error { using Error::Error; };
struct NoModelError : Error { using Error::Error; };
struct VersionError : Error { using Error::Error; };
struct CorruptModelError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

}  // namespace prepcast

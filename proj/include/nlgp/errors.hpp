#pragma once

#include <stdexcept>
#include <string>

namespace nlgp {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tabulated symbol queried outside its sample range.
struct OutOfRangeError : Error {
  using Error::Error;
};

// W^(0) <= 0: there is no subsonic regime.
struct NoSoundSpeedError : Error {
  using Error::Error;
};

struct CertificationError : Error {
  using Error::Error;
};

// M_c is not positive on the frequency lattice.
struct SupersonicMultiplierError : Error {
  using Error::Error;
};

// The amplitude touches zero, so u = rho e^{i theta} cannot be lifted.
struct VortexError : Error {
  using Error::Error;
};

struct GridTooSmallError : Error {
  using Error::Error;
};

// Speed outside the range where the requested object exists.
struct OutOfRegimeError : Error {
  using Error::Error;
};

struct UnderresolvedTailError : Error {
  using Error::Error;
};

struct VanishingAmplitudeError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace nlgp

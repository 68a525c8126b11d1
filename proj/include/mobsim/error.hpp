#pragma once

#include <stdexcept>
#include <string>

namespace mobsim {

// Base for all recoverable toolkit errors. Calibration treats these as
// candidate failures; anything else is considered a bug and propagates.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : Error {
    using Error::Error;
};

// A PLT file (or TSV stream) yielded zero valid records.
struct EmptyTrajectoryError : Error {
    using Error::Error;
};

// A trip set is empty, so the four geo-statistics are undefined.
struct NoTripsError : Error {
    using Error::Error;
};

// Invalid configuration: bad bounding box, zero home sites, out-of-range
// parameter vector, malformed calibration settings.
struct ConfigError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ConfigError(msg);
}

}  // namespace mobsim

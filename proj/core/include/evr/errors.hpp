#pragma once

#include <stdexcept>
#include <string>

namespace evr {

// Base for everything this library throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Caller violated an operation precondition (zero vector, dimension
// mismatch, empty input, ...).
struct InvalidInputError : Error {
    using Error::Error;
};

// Malformed file, response, or template.
struct ParseError : Error {
    using Error::Error;
};

// A replay store was asked for a key it does not contain. Replay mode
// never degrades: a miss always surfaces as this error, attributed to
// the offending key.
struct ReplayMissError : Error {
    using Error::Error;
};

// A live endpoint kept failing after the retry budget was spent.
struct EndpointError : Error {
    using Error::Error;
};

// Event decomposition produced no parseable EVENTS list.
struct DecompositionError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace evr

#pragma once

#include <stdexcept>
#include <string>

namespace tabml {

// Base for everything the library throws on purpose.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad argument values (k < 2, empty grid, fraction out of (0,1], ...).
struct ParamError : Error {
    using Error::Error;
};

// Column/feature name problems: missing schema column, unknown feature.
struct SchemaError : Error {
    using Error::Error;
};

// Unparseable cell or missing value without imputation enabled.
struct ParseError : Error {
    using Error::Error;
};

// Value outside its declared bounds (fraction column, label out of 1..K).
struct RangeError : Error {
    using Error::Error;
};

// Row width does not match the schema, or input lengths disagree.
struct ShapeError : Error {
    using Error::Error;
};

// Too few rows/samples for the requested operation.
struct InsufficientDataError : Error {
    using Error::Error;
};

// Cannot form the requested structure: all-identical binning values,
// minority class of size 1.
struct DegenerateError : Error {
    using Error::Error;
};

struct MissingLabelsError : Error {
    using Error::Error;
};

// A class in 1..K has no training rows.
struct MissingClassError : Error {
    using Error::Error;
};

// Tree lacks cover records needed for path-dependent attribution.
struct MissingCoverError : Error {
    using Error::Error;
};

// Brute-force enumeration would exceed the feature-count cap.
struct TractabilityError : Error {
    using Error::Error;
};

struct EmptyStratumError : Error {
    using Error::Error;
};

struct EmptyMatrixError : Error {
    using Error::Error;
};

// Run configuration invalid (missing file, bad field, ...).
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace tabml

#pragma once

#include <stdexcept>
#include <string>

namespace xwalk {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed input text or binary (world files, label files, weight blobs, ...).
struct ParseError : Error {
    using Error::Error;
};

/// A contract or invariant violation on otherwise well-formed data
/// (singular transform, window out of bounds, bad threshold, ...).
struct ValidationError : Error {
    using Error::Error;
};

/// Tensor/weight shape mismatch.
struct ShapeError : Error {
    using Error::Error;
};

/// Filesystem-level failure.
struct IoError : Error {
    using Error::Error;
};

/// One or more tile workers failed; message carries the per-tile report.
struct PipelineError : Error {
    using Error::Error;
};

}  // namespace xwalk

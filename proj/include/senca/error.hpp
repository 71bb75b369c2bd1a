#pragma once

#include <stdexcept>
#include <string>

namespace senca {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Incompatible tensor/matrix dimensions.
struct ShapeError : Error {
    using Error::Error;
};

// Malformed input file; messages carry the line number where known.
struct ParseError : Error {
    using Error::Error;
};

// Out-of-range or otherwise invalid argument value.
struct ParamError : Error {
    using Error::Error;
};

// Cross-file disagreement (e.g. spot ids present in one file but not another).
struct ConsistencyError : Error {
    using Error::Error;
};

// Coordinate outside the raster or index outside a container.
struct BoundsError : Error {
    using Error::Error;
};

// Non-finite value where a finite one is required.
struct NumericError : Error {
    using Error::Error;
};

}  // namespace senca

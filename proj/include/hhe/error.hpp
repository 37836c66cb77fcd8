#pragma once

#include <stdexcept>
#include <string>

namespace hhe {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ZeroVectorError : Error {
    using Error::Error;
};
struct DimensionMismatchError : Error {
    using Error::Error;
};
struct DegenerateBatchError : Error {
    using Error::Error;
};
struct LabelOutOfRangeError : Error {
    using Error::Error;
};
struct InvalidArchitectureError : Error {
    using Error::Error;
};
struct ShapeMismatchError : Error {
    using Error::Error;
};
struct InsufficientIdentitiesError : Error {
    using Error::Error;
};
struct DegenerateDatasetError : Error {
    using Error::Error;
};
struct InvalidConfigError : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};
struct FormatError : Error {
    using Error::Error;
};
struct EmptyGalleryError : Error {
    using Error::Error;
};
struct NoRelevantError : Error {
    using Error::Error;
};
struct EmptyListError : Error {
    using Error::Error;
};
struct DegenerateWeightsError : Error {
    using Error::Error;
};

}  // namespace hhe

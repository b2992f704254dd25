#pragma once

#include <stdexcept>
#include <string>

namespace udf {

/// Base of all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input data: malformed files, non-finite values, mismatched dims,
/// inconsistent labels. The CLI maps these to exit code 2.
class DataError : public Error {
public:
    using Error::Error;
};

class IoError : public DataError {
public:
    IoError(const std::string& path, const std::string& what)
        : DataError(path + ": " + what), path_(path) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

class FormatError : public DataError {
public:
    using DataError::DataError;
};

class DimensionError : public DataError {
public:
    using DataError::DataError;
};

} // namespace udf

#pragma once

#include <stdexcept>
#include <string>

namespace sdar {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Raised when a linear predictor or loss term is not finite.
class NumericOverflow : public Error {
public:
    NumericOverflow(const std::string& what, long row)
        : Error(what), row_(row) {}
    long row() const noexcept { return row_; }

private:
    long row_;
};

/// The restricted Hessian could not be factorized even after ridge jitter.
class SingularSystem : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, long line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    long line() const noexcept { return line_; }

private:
    long line_;
};

/// An input or output file could not be opened.
class IoError : public Error {
public:
    using Error::Error;
};

class InvalidLabel : public Error {
public:
    using Error::Error;
};

class ZeroVariance : public Error {
public:
    ZeroVariance(const std::string& what, long column)
        : Error(what), column_(column) {}
    long column() const noexcept { return column_; }

private:
    long column_;
};

} // namespace sdar

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace orthoerase {

// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class ShapeMismatch : public Error {
public:
    using Error::Error;
};

class NonFiniteValue : public Error {
public:
    using Error::Error;
};

class ZeroNorm : public Error {
public:
    using Error::Error;
};

// Raised when a residual collapses during orthonormalization; carries the
// index of the offending input vector.
class LinearlyDependent : public Error {
public:
    LinearlyDependent(std::size_t index, const std::string& what)
        : Error(what), index_(index) {}
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

class SingularGram : public Error {
public:
    using Error::Error;
};

class NotSymmetric : public Error {
public:
    using Error::Error;
};

class PromptTooLong : public Error {
public:
    using Error::Error;
};

class PromptTooShort : public Error {
public:
    using Error::Error;
};

class NoContentToken : public Error {
public:
    using Error::Error;
};

class WrongProvenance : public Error {
public:
    using Error::Error;
};

// Multi-concept variant of LinearlyDependent: carries the token position and
// the index of the concept whose value vector fell into the span of the
// previous ones.
class LinearlyDependentConcepts : public Error {
public:
    LinearlyDependentConcepts(std::size_t position, std::size_t index,
                              const std::string& what)
        : Error(what), position_(position), index_(index) {}
    std::size_t position() const noexcept { return position_; }
    std::size_t index() const noexcept { return index_; }

private:
    std::size_t position_;
    std::size_t index_;
};

class BasisLayerMismatch : public Error {
public:
    using Error::Error;
};

class TooFewSamples : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Malformed on-disk data (bad magic, truncated payload, ...).
class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace orthoerase

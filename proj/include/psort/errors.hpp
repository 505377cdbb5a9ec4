#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace psort {

//! Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

//! An invalid worker, node or digit-width configuration. The CLI maps these to
//! exit status 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

class KeyOutOfRange : public Error {
public:
    KeyOutOfRange(std::size_t index, std::uint64_t key, unsigned digits)
        : Error("key " + std::to_string(key) + " at index " +
                std::to_string(index) + " does not fit in " +
                std::to_string(digits) + " decimal digits"),
          index(index), key(key), digits(digits) {}

    std::size_t index;
    std::uint64_t key;
    unsigned digits;
};

/******************************************************************************/
// transport

class TransportError : public Error {
public:
    using Error::Error;
};

class TruncatedMessage : public TransportError {
public:
    using TransportError::TransportError;
};

class UnknownKind : public TransportError {
public:
    explicit UnknownKind(std::uint32_t kind)
        : TransportError("unknown message kind " + std::to_string(kind)),
          kind(kind) {}
    std::uint32_t kind;
};

class PeerClosed : public TransportError {
public:
    using TransportError::TransportError;
};

class SelfSend : public TransportError {
public:
    using TransportError::TransportError;
};

class BindFailure : public TransportError {
public:
    using TransportError::TransportError;
};

/******************************************************************************/

class VerificationFailed : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

} // namespace psort

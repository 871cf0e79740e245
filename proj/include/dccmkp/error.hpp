#pragma once

#include <stdexcept>
#include <string>

namespace dccmkp {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation (e.g. a quantile at 1).
class DomainError : public Error {
public:
    using Error::Error;
};

// Gene value outside {0, ..., m} or a length mismatch between solution and instance.
class EncodingError : public Error {
public:
    using Error::Error;
};

// Malformed instance, baseline, config or results file.
class FormatError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Problem too large for an exhaustive procedure.
class SizeError : public Error {
public:
    using Error::Error;
};

// Caller violated a documented precondition of a statistical procedure.
class ContractError : public Error {
public:
    using Error::Error;
};

} // namespace dccmkp

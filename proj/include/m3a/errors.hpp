#pragma once

#include <stdexcept>
#include <string>

namespace m3a {

// Out-of-domain argument or invalid parameter value.
class DomainError : public std::invalid_argument {
public:
    explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

// Too few observations for the requested estimate.
class InsufficientDataError : public std::runtime_error {
public:
    explicit InsufficientDataError(const std::string& what) : std::runtime_error(what) {}
};

// Data admits no finite maximum-likelihood solution (e.g. all values equal,
// which drives the log-logistic shape parameter to infinity).
class DegenerateDataError : public std::runtime_error {
public:
    explicit DegenerateDataError(const std::string& what) : std::runtime_error(what) {}
};

// A fit aborted without producing usable parameters.
class FitError : public std::runtime_error {
public:
    explicit FitError(const std::string& what) : std::runtime_error(what) {}
};

// Configuration file failed validation; message lists every violated field.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace m3a

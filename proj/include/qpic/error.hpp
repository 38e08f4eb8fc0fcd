#pragma once

#include <stdexcept>
#include <string>

namespace qpic {

// Base for every error raised by the library. The CLI maps the subclasses
// onto exit codes (see tools/qpic.cpp).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Mismatched dimensions, unknown mode labels, inconsistent registries.
class ConfigurationError : public Error {
public:
    using Error::Error;
};

// A value violates a documented invariant (non-unitary element, unphysical
// density matrix, positive dB entry, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Malformed or incomplete user input (missing tomography basis, bad CSV).
class InputError : public Error {
public:
    using Error::Error;
};

// A physics contract was broken at run time, e.g. photons leaking out of the
// rails a reduction expects.
class ContractViolation : public Error {
public:
    using Error::Error;
};

}  // namespace qpic

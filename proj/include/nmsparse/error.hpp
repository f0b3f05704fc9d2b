#pragma once

#include <stdexcept>
#include <string>

namespace nmsparse {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A tensor or file does not satisfy the N:M format invariants.
class FormatError : public Error {
public:
    using Error::Error;
};

/// The emulator hit an illegal opcode, bad register or out-of-bounds access.
class EmuError : public Error {
public:
    using Error::Error;
};

/// Kernel called with mismatched geometry or the wrong weight layout.
class KernelError : public Error {
public:
    using Error::Error;
};

/// No tile configuration fits in the requested L1 budget.
class TilingError : public Error {
public:
    using Error::Error;
};

}  // namespace nmsparse

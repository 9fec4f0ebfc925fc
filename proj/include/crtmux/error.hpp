#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace crtmux {

enum class Errc {
   InputOutOfRange,
   ResidueOutOfRange,
   BothZero,
   NotEnoughPrimes,
   NotCoprime,
   SizeMismatch,
   GeneratorExhausted,
   BadLength,
   BadPadding,
   Overflow,
   BadParameters,
   MissingChannel,
   BadMagic,
   BadVersion,
   Truncated,
   InvariantViolation,
   BindFailed,
   ConnectFailed,
   Timeout,
   Closed,
   BadWidth,
   ProductTooSmall,
   WidthMismatch,
   Precondition,
};

std::string_view to_string(Errc code) noexcept;

// Broad classes used for process exit codes.
enum class ErrorClass { Usage, Transport, Integrity };

ErrorClass classify(Errc code) noexcept;

class Error : public std::runtime_error {
public:
   Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

   Errc code() const noexcept { return code_; }

private:
   Errc code_;
};

}  // namespace crtmux

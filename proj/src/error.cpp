#include "crtmux/error.hpp"

namespace crtmux {

std::string_view to_string(Errc code) noexcept {
   switch (code) {
      case Errc::InputOutOfRange: return "InputOutOfRange";
      case Errc::ResidueOutOfRange: return "ResidueOutOfRange";
      case Errc::BothZero: return "BothZero";
      case Errc::NotEnoughPrimes: return "NotEnoughPrimes";
      case Errc::NotCoprime: return "NotCoprime";
      case Errc::SizeMismatch: return "SizeMismatch";
      case Errc::GeneratorExhausted: return "GeneratorExhausted";
      case Errc::BadLength: return "BadLength";
      case Errc::BadPadding: return "BadPadding";
      case Errc::Overflow: return "Overflow";
      case Errc::BadParameters: return "BadParameters";
      case Errc::MissingChannel: return "MissingChannel";
      case Errc::BadMagic: return "BadMagic";
      case Errc::BadVersion: return "BadVersion";
      case Errc::Truncated: return "Truncated";
      case Errc::InvariantViolation: return "InvariantViolation";
      case Errc::BindFailed: return "BindFailed";
      case Errc::ConnectFailed: return "ConnectFailed";
      case Errc::Timeout: return "Timeout";
      case Errc::Closed: return "Closed";
      case Errc::BadWidth: return "BadWidth";
      case Errc::ProductTooSmall: return "ProductTooSmall";
      case Errc::WidthMismatch: return "WidthMismatch";
      case Errc::Precondition: return "Precondition";
   }
   return "Unknown";
}

ErrorClass classify(Errc code) noexcept {
   switch (code) {
      case Errc::BindFailed:
      case Errc::ConnectFailed:
      case Errc::Timeout:
      case Errc::Closed:
      case Errc::BadWidth:
         return ErrorClass::Transport;
      case Errc::ResidueOutOfRange:
      case Errc::Overflow:
      case Errc::BadPadding:
      case Errc::MissingChannel:
      case Errc::BadLength:
         return ErrorClass::Integrity;
      default:
         return ErrorClass::Usage;
   }
}

}  // namespace crtmux

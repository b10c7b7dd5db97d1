#ifndef MODEDEC_ERRORS_HPP
#define MODEDEC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace modedec {

// Bad arguments or shapes (CLI exit code 2 when raised from argument handling).
struct invalid_input : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Missing/malformed files, inconsistent datasets (CLI exit code 3).
struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Singular systems, diverging optimization, non-finite values (CLI exit code 4).
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// API misuse, e.g. backward before forward.
struct state_error : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace modedec

#endif

#pragma once

#include <stdexcept>
#include <string>

namespace evcharge {

// Invalid parameters, schemes or command-line configuration.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input data that cannot be processed (missing columns, nothing left after
// filtering, unreadable files).
struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace evcharge

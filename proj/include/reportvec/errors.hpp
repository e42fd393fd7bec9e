#pragma once

#include <stdexcept>
#include <string>

namespace rvec {

// Input violated a documented contract (out-of-range label, duplicate id, ...).
struct validation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed file content; the message names the file and line where known.
struct parse_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical failure during training or optimization (non-finite values).
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace rvec

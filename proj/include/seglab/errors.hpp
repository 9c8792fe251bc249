#pragma once

#include <stdexcept>

namespace seglab {

struct invalid_parameter : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct invalid_input : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct invalid_spec : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A Dice term was requested for a class with an empty ground-truth region.
struct undefined_region : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct degenerate_marginal : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace seglab

#ifndef LZ_ERROR_HPP
#define LZ_ERROR_HPP

#include <stdexcept>
#include <string>

namespace lz {

/// Base class of every error thrown by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument or configuration was violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// The adaptive integrator could not make progress (step-size underflow or step budget).
class IntegrationError : public Error {
public:
    IntegrationError(const std::string& what, double last_good_time)
        : Error(what + " (last good time t = " + std::to_string(last_good_time) + ")"),
          last_good_time_(last_good_time) {}

    double last_good_time() const noexcept { return last_good_time_; }

private:
    double last_good_time_;
};

/// An iterative procedure (window doubling, root polishing, bisection) did not converge.
class NotConverged : public Error {
public:
    using Error::Error;
};

/// A state left its admissible set (norm, trace, hermiticity, positivity).
class InvariantViolation : public Error {
public:
    using Error::Error;
};

}  // namespace lz

#endif  // LZ_ERROR_HPP

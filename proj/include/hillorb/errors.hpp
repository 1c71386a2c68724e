#pragma once

#include <stdexcept>
#include <string>

namespace hillorb {

/// Input outside the domain of a conversion or evaluation (e >= 1, a <= 0, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Evaluation at r = 0 or at a collision configuration.
class SingularityError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// An iterative method failed to reach its tolerance.
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Step-size collapse or non-finite state during propagation.
class IntegrationFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace hillorb

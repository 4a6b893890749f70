#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace eqe {

/// Invalid argument or parameter outside the supported domain.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical routine exhausted its budget without reaching tolerance.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, std::size_t attempts, double best_estimate = 0.0)
        : std::runtime_error(what), attempts_(attempts), best_estimate_(best_estimate) {}

    std::size_t attempts() const noexcept { return attempts_; }
    double best_estimate() const noexcept { return best_estimate_; }

private:
    std::size_t attempts_;
    double best_estimate_;
};

/// Moment targets that no distribution of the family can reproduce.
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace eqe

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace inhomo {

/// Argument outside the domain of an operation (x outside I, bad parameter).
class domain_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Construction-time rejection of an input object (curve, psi, form).
class invalid_input : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A request whose work size exceeds the configured budget.
class budget_error : public std::runtime_error {
public:
    budget_error(const std::string& what, std::uint64_t requested, std::uint64_t budget)
        : std::runtime_error(what + " (requested " + std::to_string(requested) + ", budget " +
                             std::to_string(budget) + ")"),
          requested_(requested), budget_(budget) {}

    std::uint64_t requested() const noexcept { return requested_; }
    std::uint64_t budget() const noexcept { return budget_; }

private:
    std::uint64_t requested_;
    std::uint64_t budget_;
};

/// Vectors handed to the rounding system are linearly dependent.
class degenerate_vectors : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Localization hypothesis failed for the requested Q.
class q_too_small : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent experiment configuration.
class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::uint64_t default_form_budget = 1'000'000'000ULL;

} // namespace inhomo

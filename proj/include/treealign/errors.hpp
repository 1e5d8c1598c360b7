#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace treealign {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A sampler grew a tree past its configured node cap.
class BudgetExceeded : public Error {
public:
    explicit BudgetExceeded(std::size_t cap)
        : Error("tree node budget exceeded (cap " + std::to_string(cap) + ")"), cap_(cap) {}
    std::size_t cap() const noexcept { return cap_; }

private:
    std::size_t cap_;
};

/// An argument lies outside the mathematical domain of the operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// The smaller side of a matching-sum exceeds the bitmask DP cap.
class DegreeCapExceeded : public Error {
public:
    DegreeCapExceeded(std::size_t c, std::size_t c_prime, std::size_t cap, std::string where = {})
        : Error("degree cap exceeded: min(" + std::to_string(c) + ", " + std::to_string(c_prime) +
                ") > " + std::to_string(cap) + (where.empty() ? "" : " at " + where)),
          c_(c), c_prime_(c_prime), cap_(cap) {}
    std::size_t c() const noexcept { return c_; }
    std::size_t c_prime() const noexcept { return c_prime_; }
    std::size_t cap() const noexcept { return cap_; }

private:
    std::size_t c_;
    std::size_t c_prime_;
    std::size_t cap_;
};

class OracleTooLarge : public Error {
public:
    using Error::Error;
};

class MissingGroundTruth : public Error {
public:
    MissingGroundTruth() : Error("sample carries no ground truth (H0 sample)") {}
};

class NonInjectiveInput : public Error {
public:
    using Error::Error;
};

/// Message table would exceed the configured entry budget.
class CapacityExceeded : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace treealign

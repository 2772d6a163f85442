#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace efg {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Evaluation requested outside the declared domain or inside the excluded null-section ball.
struct DomainError : Error {
    using Error::Error;
};

struct UnsupportedOrderError : Error {
    using Error::Error;
};

struct ShapeError : Error {
    using Error::Error;
};

// A matrix (Hessian, metric block) is singular at the evaluation point.
struct DegeneracyError : Error {
    DegeneracyError(const std::string& what, double det) : Error(what), determinant(det) {}
    double determinant;
};

// Construction preconditions violated (derivative crossing zero, mixed solution regimes, ...).
struct RegimeError : Error {
    RegimeError(const std::string& what, std::vector<double> where = {})
        : Error(what), crossings(std::move(where)) {}
    std::vector<double> crossings;
};

struct ConvergenceError : Error {
    using Error::Error;
};

struct ParameterError : Error {
    using Error::Error;
};

// Schema or reference problems in a scenario configuration.
struct ConfigError : Error {
    ConfigError(const std::string& what, std::vector<std::string> all = {})
        : Error(what), messages(std::move(all)) {
        if (messages.empty()) messages.push_back(what);
    }
    std::vector<std::string> messages;
};

}  // namespace efg

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gtheta {

/// Machine-readable error categories; the CLI maps each to its own exit code.
enum class ErrorCategory {
    parse,
    validation,
    degenerate_shift,
    precision,
    geometry,
    pole,
    chart,
    size,
    accuracy,
};

inline std::string_view category_name(ErrorCategory c) {
    switch (c) {
    case ErrorCategory::parse: return "parse";
    case ErrorCategory::validation: return "validation";
    case ErrorCategory::degenerate_shift: return "degenerate-shift";
    case ErrorCategory::precision: return "precision";
    case ErrorCategory::geometry: return "geometry";
    case ErrorCategory::pole: return "pole";
    case ErrorCategory::chart: return "chart";
    case ErrorCategory::size: return "size";
    case ErrorCategory::accuracy: return "accuracy";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

class ParseError : public Error {
public:
    explicit ParseError(const std::string& what) : Error(ErrorCategory::parse, what) {}
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(ErrorCategory::validation, what) {}
};

class DegenerateShiftError : public Error {
public:
    explicit DegenerateShiftError(const std::string& what)
        : Error(ErrorCategory::degenerate_shift, what) {}
};

/// Raised when the lattice radius needed for the requested tolerance exceeds the cap.
class PrecisionError : public Error {
public:
    PrecisionError(const std::string& what, double achievable)
        : Error(ErrorCategory::precision, what), achievable_(achievable) {}
    double achievable_epsilon() const noexcept { return achievable_; }

private:
    double achievable_;
};

class GeometryError : public Error {
public:
    explicit GeometryError(const std::string& what) : Error(ErrorCategory::geometry, what) {}
};

/// Evaluation requested exactly at a pole of a form or primitive.
/// `preimage` names the offending preimage (flat index into the curve's point list).
class PoleError : public Error {
public:
    PoleError(const std::string& what, int preimage)
        : Error(ErrorCategory::pole, what), preimage_(preimage) {}
    int preimage() const noexcept { return preimage_; }

private:
    int preimage_;
};

class ChartError : public Error {
public:
    explicit ChartError(const std::string& what) : Error(ErrorCategory::chart, what) {}
};

class SizeError : public Error {
public:
    explicit SizeError(const std::string& what) : Error(ErrorCategory::size, what) {}
};

class AccuracyError : public Error {
public:
    explicit AccuracyError(const std::string& what) : Error(ErrorCategory::accuracy, what) {}
};

} // namespace gtheta

#pragma once

#include <stdexcept>
#include <string>

namespace betarce {

// Every library failure carries a short machine-readable code next to the
// human message; the CLI prints both.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

struct DomainError : Error {
    explicit DomainError(const std::string& m) : Error("domain_error", m) {}
};

struct PreconditionError : Error {
    explicit PreconditionError(const std::string& m) : Error("precondition_error", m) {}
};

struct DimensionError : Error {
    explicit DimensionError(const std::string& m) : Error("dimension_mismatch", m) {}
};

struct EnsembleSizeError : Error {
    explicit EnsembleSizeError(const std::string& m) : Error("ensemble_size", m) {}
};

struct InfeasibleSpecError : Error {
    explicit InfeasibleSpecError(const std::string& m) : Error("infeasible", m) {}
};

struct DegenerateDataError : Error {
    explicit DegenerateDataError(const std::string& m) : Error("degenerate_data", m) {}
};

struct SchemaError : Error {
    explicit SchemaError(const std::string& m) : Error("schema_error", m) {}
};

struct ParseError : Error {
    ParseError(const std::string& m, long line)
        : Error("parse_error", m + " (line " + std::to_string(line) + ")"), line_(line) {}
    long line() const noexcept { return line_; }

private:
    long line_;
};

struct NonBinaryLabelError : Error {
    explicit NonBinaryLabelError(const std::string& m) : Error("non_binary_label", m) {}
};

struct EmptyInputError : Error {
    explicit EmptyInputError(const std::string& m) : Error("empty_input", m) {}
};

struct BaseNotFoundError : Error {
    explicit BaseNotFoundError(const std::string& m) : Error("base_not_found", m) {}
};

struct IoError : Error {
    explicit IoError(const std::string& m) : Error("io_error", m) {}
};

struct UsageError : Error {
    explicit UsageError(const std::string& m) : Error("usage_error", m) {}
};

}  // namespace betarce

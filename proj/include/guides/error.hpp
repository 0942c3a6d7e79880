#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace guides {

/// Base of every error raised by the library. `code()` is a stable,
/// machine-readable category used by the CLI exit codes and HTTP statuses.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

class NotFoundError : public Error {
public:
    explicit NotFoundError(const std::string& what) : Error("not_found", what) {}
};

class ArgumentError : public Error {
public:
    explicit ArgumentError(const std::string& what) : Error("argument", what) {}
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error("validation", what) {}
};

class ConflictError : public Error {
public:
    explicit ConflictError(const std::string& what) : Error("conflict", what) {}
};

class AuthorizationError : public Error {
public:
    explicit AuthorizationError(const std::string& what) : Error("unauthorized", what) {}
};

class UnsupportedError : public Error {
public:
    explicit UnsupportedError(const std::string& what) : Error("unsupported", what) {}
};

class TypeError : public Error {
public:
    explicit TypeError(const std::string& what) : Error("type", what) {}
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t byte_offset)
        : Error("parse", what), byte_offset_(byte_offset) {}

    std::size_t byte_offset() const noexcept { return byte_offset_; }

private:
    std::size_t byte_offset_;
};

/// Raised by apply_edit; `action_index` is the position of the first
/// offending action inside the rejected batch.
class IntegrityError : public Error {
public:
    IntegrityError(const std::string& what, std::size_t action_index)
        : Error("integrity", what), action_index_(action_index) {}

    std::size_t action_index() const noexcept { return action_index_; }

private:
    std::size_t action_index_;
};

}  // namespace guides

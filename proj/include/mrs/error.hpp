#pragma once

#include <cstddef>
#include <exception>
#include <stdexcept>
#include <string>

namespace mrs {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file or record. Carries the 1-based source line when known.
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t line = 0)
        : Error(line == 0 ? message : "line " + std::to_string(line) + ": " + message),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Input that parses but violates a data contract (duplicate titles, missing answers, ...).
class DataError : public Error {
public:
    using Error::Error;
};

/// Caller broke an operation precondition (negative index, k < 1, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    enum class Key { title, paragraph_index, sentence_index };

    NotFoundError(Key key, const std::string& message) : Error(message), key_(key) {}

    Key key() const noexcept { return key_; }

private:
    Key key_;
};

/// Remote component could not be reached or did not answer in time.
class TransportError : public Error {
public:
    enum class Kind { connect, timeout, http_status };

    TransportError(Kind kind, const std::string& message) : Error(message), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// Remote component answered with a payload that violates the wire protocol.
class ProtocolError : public Error {
public:
    using Error::Error;
};

/// A pipeline stage failed for a specific query. `cause()` holds the original exception.
class StageError : public Error {
public:
    StageError(std::string query_id, std::string stage, const std::string& what,
               std::exception_ptr cause = nullptr)
        : Error("query " + query_id + ": " + stage + " stage failed: " + what),
          query_id_(std::move(query_id)),
          stage_(std::move(stage)),
          cause_(std::move(cause)) {}

    const std::string& query_id() const noexcept { return query_id_; }
    const std::string& stage() const noexcept { return stage_; }
    std::exception_ptr cause() const noexcept { return cause_; }

private:
    std::string query_id_;
    std::string stage_;
    std::exception_ptr cause_;
};

}  // namespace mrs

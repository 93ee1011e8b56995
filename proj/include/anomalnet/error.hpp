#pragma once

#include <stdexcept>
#include <string>

namespace anomalnet {

// Error categories; the CLI maps them to process exit codes
// (invalid_argument/config -> 2, data -> 3, numeric -> 4, io -> 5).
enum class ErrorKind {
    invalid_argument,
    config,
    data,
    numeric,
    io,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

    int exit_code() const {
        switch (kind_) {
        case ErrorKind::invalid_argument:
        case ErrorKind::config: return 2;
        case ErrorKind::data: return 3;
        case ErrorKind::numeric: return 4;
        case ErrorKind::io: return 5;
        }
        return 1;
    }

    const char* kind_name() const {
        switch (kind_) {
        case ErrorKind::invalid_argument: return "invalid-argument";
        case ErrorKind::config: return "config";
        case ErrorKind::data: return "data";
        case ErrorKind::numeric: return "numeric";
        case ErrorKind::io: return "io";
        }
        return "unknown";
    }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void throw_invalid_argument(const std::string& msg) {
    throw Error(ErrorKind::invalid_argument, msg);
}
[[noreturn]] inline void throw_config(const std::string& msg) {
    throw Error(ErrorKind::config, msg);
}
[[noreturn]] inline void throw_data(const std::string& msg) {
    throw Error(ErrorKind::data, msg);
}
[[noreturn]] inline void throw_numeric(const std::string& msg) {
    throw Error(ErrorKind::numeric, msg);
}
[[noreturn]] inline void throw_io(const std::string& msg) {
    throw Error(ErrorKind::io, msg);
}

} // namespace anomalnet

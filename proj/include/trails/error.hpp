#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace trails {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// corpus
class IoError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    FormatError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class InvalidFraction : public Error {
public:
    using Error::Error;
};

// llm_gateway
class MissingPlaceholder : public Error {
public:
    explicit MissingPlaceholder(std::string name)
        : Error("missing placeholder binding: " + name), name_(std::move(name)) {}

    const std::string& name() const { return name_; }

private:
    std::string name_;
};

class TemplateError : public Error {
public:
    using Error::Error;
};

class TransportError : public Error {
public:
    using Error::Error;
};

class AuthError : public Error {
public:
    using Error::Error;
};

class MockExhausted : public Error {
public:
    using Error::Error;
};

// scenario_partitioner / input_forge
class ScenarioParseError : public Error {
public:
    using Error::Error;
};

class PropertiesParseError : public Error {
public:
    using Error::Error;
};

class InputParseError : public Error {
public:
    using Error::Error;
};

// exec_bridge
class ExecutorUnavailable : public Error {
public:
    using Error::Error;
};

class HarnessSpawnError : public ExecutorUnavailable {
public:
    using ExecutorUnavailable::ExecutorUnavailable;
};

class HarnessProtocolError : public Error {
public:
    using Error::Error;
};

// verdict_engine / evaluation_metrics / cli
class InvalidThreshold : public Error {
public:
    using Error::Error;
};

class MismatchedRunSets : public Error {
public:
    using Error::Error;
};

class WrongApproachCount : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace trails

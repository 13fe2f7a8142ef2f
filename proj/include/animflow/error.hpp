#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace animflow {

class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// Raised for operations on incompatible value kinds.
class TypeError : public Error
{
public:
    using Error::Error;
};

class SyntaxError : public Error
{
public:
    SyntaxError(const std::string& message, std::size_t offset)
        : Error(message + " at offset " + std::to_string(offset)), offset_(offset)
    {
    }

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

// Structural problem in a document, annotated with a JSON-pointer-like path.
class SchemaError : public Error
{
public:
    SchemaError(std::string path, const std::string& message)
        : Error(path + ": " + message), path_(std::move(path))
    {
    }

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

class EvalError : public Error
{
public:
    using Error::Error;
};

class RuntimeError : public Error
{
public:
    using Error::Error;
};

// A file could not be read or written.
class IoError : public Error
{
public:
    using Error::Error;
};

} // namespace animflow

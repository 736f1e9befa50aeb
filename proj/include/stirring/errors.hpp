#pragma once

#include <stdexcept>
#include <string>

namespace stirring
{
    /// Base class for every error raised by the library.
    class Error : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    class DepthCapExceeded : public Error
    {
    public:
        using Error::Error;
    };

    class InvalidTree : public Error
    {
    public:
        using Error::Error;
    };

    class InvalidVertex : public Error
    {
    public:
        using Error::Error;
    };

    /// Two joints on one pole share a height (a probability-zero event under Poisson bars).
    class HeightCollision : public Error
    {
    public:
        using Error::Error;
    };

    class DuplicateHeight : public Error
    {
    public:
        using Error::Error;
    };

    class QueryBeyondHorizon : public Error
    {
    public:
        using Error::Error;
    };

    class NotAUsefulBar : public Error
    {
    public:
        using Error::Error;
    };

    class PreconditionViolated : public Error
    {
    public:
        using Error::Error;
    };

    class DomainError : public Error
    {
    public:
        using Error::Error;
    };

    class ToleranceNotMet : public Error
    {
    public:
        using Error::Error;
    };

    class ParseError : public Error
    {
    public:
        using Error::Error;
    };
}

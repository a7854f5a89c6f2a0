#pragma once

#include <stdexcept>
#include <string>

namespace vra {

// Root of every error the library throws. Precondition violations use
// std::invalid_argument instead.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class NoSuchTurn : public Error {
public:
    using Error::Error;
};

class InvalidTurn : public Error {
public:
    using Error::Error;
};

class ImageDecodeError : public Error {
public:
    using Error::Error;
};

}  // namespace vra

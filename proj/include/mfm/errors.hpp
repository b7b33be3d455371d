// Copyright 2026 The MFM Stereo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

#include "mfm/namespace.hpp"

MFM_NAMESPACE_BEGIN

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Violated configuration or input-specification invariant (CLI exit code 2).
class ValidationError : public Error {
public:
    using Error::Error;
};

class DivisibilityError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class RangeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class SpecError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Malformed or unknown configuration entry.
class ConfigError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

class StateError : public Error {
public:
    using Error::Error;
};

class MaskError : public Error {
public:
    using Error::Error;
};

class ArityError : public Error {
public:
    using Error::Error;
};

class IndexError : public Error {
public:
    using Error::Error;
};

class IOError : public Error {
public:
    using Error::Error;
};

/// Class name of the most derived library error, or "Error" for anything else.
inline const char* error_kind(const std::exception& e) {
#define MFM_ERROR_KIND(T) \
    if (dynamic_cast<const T*>(&e) != nullptr) return #T;
    MFM_ERROR_KIND(DivisibilityError)
    MFM_ERROR_KIND(RangeError)
    MFM_ERROR_KIND(SpecError)
    MFM_ERROR_KIND(ConfigError)
    MFM_ERROR_KIND(ValidationError)
    MFM_ERROR_KIND(ShapeError)
    MFM_ERROR_KIND(FormatError)
    MFM_ERROR_KIND(NumericError)
    MFM_ERROR_KIND(StateError)
    MFM_ERROR_KIND(MaskError)
    MFM_ERROR_KIND(ArityError)
    MFM_ERROR_KIND(IndexError)
    MFM_ERROR_KIND(IOError)
#undef MFM_ERROR_KIND
    return "Error";
}

MFM_NAMESPACE_END

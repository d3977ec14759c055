// Copyright 2026 The permsynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
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

namespace permsynth {

// Root of the library's exception hierarchy. The CLI maps subclasses onto
// process exit codes, so keep new error kinds under one of these branches.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller supplied something outside an operation's domain.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A node/edge selection that does not form a valid connected mask.
class InvalidTopology : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// Sampling from a distribution with an empty support.
class NoValidAction : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// Exact search refused because the state space is too large.
class CapacityError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// An internal invariant was broken (e.g. an inactive edge reached the
// environment). Always a bug, never user error.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed text input (topology, permutation, circuit, config files).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Model container failures. Subclasses let callers tell them apart.
class ModelFormatError : public Error {
 public:
  using Error::Error;
};

class ModelChecksumError : public ModelFormatError {
 public:
  using ModelFormatError::ModelFormatError;
};

class ModelVersionError : public ModelFormatError {
 public:
  using ModelFormatError::ModelFormatError;
};

class ModelTruncatedError : public ModelFormatError {
 public:
  using ModelFormatError::ModelFormatError;
};

// A PPO iteration produced a non-finite loss.
class TrainingAborted : public Error {
 public:
  using Error::Error;
};

}  // namespace permsynth

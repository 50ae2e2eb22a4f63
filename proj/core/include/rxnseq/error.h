//
// rxnseq - reaction product prediction toolkit
// SPDX-License-Identifier: Apache-2.0
//

#ifndef RXNSEQ_ERROR_H_
#define RXNSEQ_ERROR_H_

#include <stdexcept>
#include <string>

namespace rxnseq {

// Base of every error thrown by the library. Errors that stem from bad user
// input derive from InputError so that front ends can tell them apart from
// internal failures.
class Error: public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InputError: public Error {
public:
  using Error::Error;
};

// Chemically impossible bond configuration on an implicit-hydrogen atom.
class ValenceError: public InputError {
public:
  using InputError::InputError;
};

// Structural graph problem: self loop, duplicate bond, conflicting ring bond.
class GraphError: public InputError {
public:
  using InputError::InputError;
};

}  // namespace rxnseq

#endif  // RXNSEQ_ERROR_H_

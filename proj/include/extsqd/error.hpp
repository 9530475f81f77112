// Copyright 2026 The extsqd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace extsqd {

/// Malformed or inconsistent user input (files, configs, operator definitions).
class InputError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// An iterative solver or fit failed to reach its tolerance.
class ConvergenceError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

}  // namespace extsqd

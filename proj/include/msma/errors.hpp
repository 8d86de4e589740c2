// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace msma {

// Argument outside an operation's domain (std <= 0, level out of range...).
class DomainError : public std::domain_error
{
public:
    using std::domain_error::domain_error;
};

// Caller broke an API contract (e.g. differentiating a non-scalar).
class ContractError : public std::logic_error
{
public:
    using std::logic_error::logic_error;
};

// NaN/Inf loss, density underflow and similar numerical breakdowns.
class NumericalError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// Malformed binary or text input; offset is the byte position of the fault.
class ParseError : public IoError
{
public:
    ParseError(const std::string& what, std::size_t offset)
      : IoError(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset)
    {}

    [[nodiscard]] auto offset() const noexcept -> std::size_t { return offset_; }

private:
    std::size_t offset_;
};

} // namespace msma

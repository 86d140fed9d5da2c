/*
 * Copyright 2025 The Selens Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace selens {

// Bad or inconsistent input data (wrong sizes, missing values, out-of-range
// arguments discovered at run time).
class validation_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Inconsistent configuration (e.g. a directed feature requested on an
// undirected graph, window longer than the series).
class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input text; message carries the line number.
class parse_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Asking for an exact algorithm beyond its tractable size.
class capacity_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Weighted correlation of a (weight-)constant vector.
class undefined_correlation_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace selens

// Copyright 2026 The dxgate Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DXGATE_HTTP_HPP
#define DXGATE_HTTP_HPP

// Always include httplib through this wrapper: a transitive resolv.h
// include defines `_res` as a macro, which corrupts later declarations
// that use the identifier (Eigen's product kernels do).
#include "httplib.h"
#ifdef _res
#undef _res
#endif

#endif  // DXGATE_HTTP_HPP

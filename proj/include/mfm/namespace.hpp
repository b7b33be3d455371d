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

// Every translation unit picks its scalar precision at compile time. The float
// and double builds live in distinct inline namespaces so both libraries can be
// linked into one binary (the double build exists for finite-difference checks).
#ifdef MFM_REAL_DOUBLE
#define MFM_PRECISION_NS f64
#else
#define MFM_PRECISION_NS f32
#endif

#define MFM_NAMESPACE_BEGIN \
    namespace mfm {         \
    inline namespace MFM_PRECISION_NS {
#define MFM_NAMESPACE_END \
    }                     \
    }

MFM_NAMESPACE_BEGIN

#ifdef MFM_REAL_DOUBLE
using real = double;
#else
using real = float;
#endif

MFM_NAMESPACE_END

// Copyright 2026 The scoredvi Authors
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

#include "tensor.hpp"

namespace sdvi {

inline constexpr double kPsnrCapDb = 100.0;

// Peak 1.0. Identical inputs return kPsnrCapDb.
double psnr(const ImageTensor& a, const ImageTensor& b);

// Mean SSIM over the valid region of an 11x11 Gaussian window (sigma 1.5),
// averaged over channels. C1 = 0.01^2, C2 = 0.03^2 for peak 1.0.
double ssim(const ImageTensor& a, const ImageTensor& b);

}  // namespace sdvi

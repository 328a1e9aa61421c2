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

#include "noise_estimator.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"
#include "pd.hpp"

namespace sdvi {
namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double texture_score(const ImageTensor& img, int c, int y0, int x0) {
  double acc = 0.0;
  int n = 0;
  for (int y = y0; y < y0 + kNoisePatch; ++y)
    for (int x = x0; x < x0 + kNoisePatch - 1; ++x, ++n) acc += std::abs(img.at(c, y, x + 1) - img.at(c, y, x));
  double h = acc / n;
  acc = 0.0;
  n = 0;
  for (int y = y0; y < y0 + kNoisePatch - 1; ++y)
    for (int x = x0; x < x0 + kNoisePatch; ++x, ++n) acc += std::abs(img.at(c, y + 1, x) - img.at(c, y, x));
  return h + acc / n;
}

// var(n - box3(n)) = (72/81) var(n) for white noise.
double residual_std(const ImageTensor& img, int c, int y0, int x0) {
  static const double kCorrection = std::sqrt(81.0 / 72.0);
  std::vector<double> r;
  r.reserve((kNoisePatch - 2) * (kNoisePatch - 2));
  for (int y = y0 + 1; y < y0 + kNoisePatch - 1; ++y)
    for (int x = x0 + 1; x < x0 + kNoisePatch - 1; ++x) {
      double box = 0.0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) box += img.at(c, y + dy, x + dx);
      r.push_back(img.at(c, y, x) - box / 9.0);
    }
  double mean = 0.0;
  for (double v : r) mean += v;
  mean /= static_cast<double>(r.size());
  double ss = 0.0;
  for (double v : r) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(r.size() - 1)) * kCorrection;
}

}  // namespace

NoiseEstimate estimate_delta(const ImageTensor& y) {
  if (y.height() < kNoiseMinSize || y.width() < kNoiseMinSize) {
    throw ArgumentError("estimate_delta: image " + y.shape_string() + " smaller than 32x32");
  }
  const SubImageGrid grid = pd_down(y, kNoisePdStride);
  NoiseEstimate est;
  double sum = 0.0;
  for (int c = 0; c < y.channels(); ++c) {
    for (const ImageTensor& sub : grid.subs) {
      std::vector<double> scores, stds;
      for (int py = 0; py + kNoisePatch <= sub.height(); py += kNoisePatchStride)
        for (int px = 0; px + kNoisePatch <= sub.width(); px += kNoisePatchStride) {
          scores.push_back(texture_score(sub, c, py, px));
          stds.push_back(residual_std(sub, c, py, px));
        }
      const double threshold = median(scores);
      std::vector<double> kept;
      for (std::size_t p = 0; p < scores.size(); ++p)
        if (scores[p] <= threshold) kept.push_back(stds[p]);
      est.patches_used += kept.size();
      const double m = 255.0 * median(kept);
      est.sub_image_medians.push_back(m);
      sum += m;
    }
  }
  est.delta = sum / static_cast<double>(est.sub_image_medians.size());
  return est;
}

double lambda_weight(double delta, double l1, double l2, double gamma) {
  if (delta < l1) return 1.0 / gamma;
  if (delta < l2) return 1.0;
  return gamma;
}

}  // namespace sdvi

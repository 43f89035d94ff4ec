// Copyright 2026 The privrec Authors
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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>

#include "privrec/error.hpp"

namespace privrec::sensitivity {

// Probabilities are clamped to [kProbabilityEpsilon, 1 - kProbabilityEpsilon]
// before taking logs.
inline constexpr double kProbabilityEpsilon = 1e-12;

struct ClassWeights {
  double nonsensitive = 1.0;
  double sensitive = 1.0;

  double for_label(bool is_sensitive) const {
    return is_sensitive ? sensitive : nonsensitive;
  }
};

struct FocalLossParams {
  double gamma = 2.0;
  ClassWeights class_weights;

  void validate() const {
    if (!(gamma >= 0.0)) throw Error(ErrorKind::kConfig, "focal gamma must be >= 0");
    if (!(class_weights.nonsensitive > 0.0) || !(class_weights.sensitive > 0.0)) {
      throw Error(ErrorKind::kConfig, "class weights must be positive");
    }
  }
};

// w_c = N / (2 * N_c) for each of the two classes.
inline ClassWeights class_weights(std::size_t n_total, std::size_t n_nonsensitive,
                                  std::size_t n_sensitive) {
  if (n_nonsensitive == 0 || n_sensitive == 0) {
    throw Error(ErrorKind::kDegenerateClass, "class_weights: a class has no samples");
  }
  if (n_total != n_nonsensitive + n_sensitive) {
    throw Error(ErrorKind::kShape, "class_weights: counts do not sum to total");
  }
  const double n = static_cast<double>(n_total);
  return {n / (2.0 * static_cast<double>(n_nonsensitive)),
          n / (2.0 * static_cast<double>(n_sensitive))};
}

inline double clamp_probability(double p) {
  return std::clamp(p, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
}

// L = -sum_i w_i (1 - p_i)^gamma log(p_i), where p_i is the predicted
// probability of sample i's true class and w_i that class's weight.
inline double focal_loss(std::span<const double> probs_true_class,
                         std::span<const double> true_class_weights,
                         double gamma) {
  if (probs_true_class.size() != true_class_weights.size()) {
    throw Error(ErrorKind::kShape, "focal_loss: probability/weight length mismatch");
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < probs_true_class.size(); ++i) {
    const double p = clamp_probability(probs_true_class[i]);
    loss -= true_class_weights[i] * std::pow(1.0 - p, gamma) * std::log(p);
  }
  return loss;
}

// Derivative of one sample's focal loss with respect to the logit z, where the
// positive-class probability is sigmoid(z).
//   p = sigmoid(z) if the label is positive, 1 - sigmoid(z) otherwise
//   dL/dz = s * w * (gamma * p * (1-p)^gamma * log p - (1-p)^(gamma+1))
// with s = +1 for positive labels and -1 for negative ones.
inline double focal_loss_dlogit(double positive_probability, bool label,
                                double weight, double gamma) {
  const double p = clamp_probability(label ? positive_probability
                                           : 1.0 - positive_probability);
  const double q = 1.0 - p;
  const double d = weight * (gamma * p * std::pow(q, gamma) * std::log(p) -
                             std::pow(q, gamma + 1.0));
  return label ? d : -d;
}

inline double sigmoid(double z) {
  if (z >= 0) {
    const double e = std::exp(-z);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace privrec::sensitivity

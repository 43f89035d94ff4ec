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
#include <cctype>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "privrec/catalog.hpp"
#include "privrec/error.hpp"

namespace privrec::gateway {

// Bumped whenever any template text changes; recorded in run manifests.
inline constexpr std::string_view kPromptVersion = "1";

struct PromptTemplate {
  std::string name;
  std::string system_text;
  std::string user_text_template;  // placeholders: {count}, {history}
};

struct RenderedPrompt {
  std::string system;
  std::string user;
};

inline constexpr std::string_view kRecommenderRole =
    "You are an assistant providing product recommendations.";

// Server-side recommender prompt.
inline const PromptTemplate& server_recommendation_template() {
  static const PromptTemplate t{
      "server_recommendation",
      std::string(kRecommenderRole),
      R"(Task: Based on the user's purchase history provided below, recommend {count} product descriptions. Ensure that:
1. The proportion of product categories in the recommendations matches the proportion in the purchase history. For example, if 50% of the purchases are from the 'fashion' category, 50% of the recommendations should also be from 'fashion.'
2. All categories present in the purchase history are represented in the recommendations.
3. The output consists of a numbered list of the recommended product descriptions.

Provide only the final recommendations as a numbered list.

User's purchase history:
{history})"};
  return t;
}

// On-device recommender prompt for the sensitive subset.
inline const PromptTemplate& local_recommendation_template() {
  static const PromptTemplate t{
      "local_recommendation",
      std::string(kRecommenderRole),
      R"(Task: You are an assistant providing product recommendations. Based on the items listed below, suggest only {count} other products that are relevant and specific to similar needs.

User's purchase history:
{history})"};
  return t;
}

// Few-shot labelling prompt; the product text is appended after the last line.
inline constexpr std::string_view kSensitivityLabelPrompt =
    R"(Task: Assign a label ("nonsensitive" or "sensitive") to a product based on its implications for medical conditions.

Classification Criteria:
- nonsensitive → Products that a normal person may buy for general use.
  Includes common wellness, personal care, and household items that do not imply a medical condition.
  Examples: "multivitamins", "herbal supplements", "general skincare", "fluoride toothpaste", "protein powder".
- sensitive → Products that imply a medical condition or health concern.
  Includes anything specifically marketed for symptom relief, condition management, or treatment.
  Examples: "prescription medications", "medical devices", "condition-specific supplements".

Examples:
- Product: "Daily multivitamin with Vitamin D & Zinc"
  Label: "nonsensitive"
- Product: "Fragrance-free laundry detergent for sensitive skin"
  Label: "nonsensitive"
- Product: "Joint pain relief cream with menthol"
  Label: "sensitive"
- Product: "Blood glucose monitoring kit for diabetes"
  Label: "sensitive"
- Product: "Prescription-strength corticosteroid cream for eczema"
  Label: "sensitive"

Instruction: Write only the label. Do not write anything else.

**Here is the product to classify:**)";

// Few-shot sensitivity-score prompt; the product text is appended.
inline constexpr std::string_view kSensitivityScorePrompt =
    R"(Task: Assign a sensitivity score between 0 and 1 to a product based on its implications for medical conditions.

Scoring Criteria:
- 0.0 → General-use products with no medical implications (e.g., vitamins, cosmetics, general wellness items).
  Example: "Multivitamins", "herbal teas", "fluoride toothpaste".
- 0.1 - 0.4 → Health-related products not tied to a specific medical condition (e.g., sleep aids, general pain relief).
  Example: "Fragrance-free detergent for sensitive skin" (0.3), "melatonin gummies" (0.4).
- 0.5 - 0.7 → Products suggesting a potential health concern but commonly used for wellness (e.g., symptom relief, targeted supplements).
  Example: "Liver detox supplements" (0.7), "pain-relief patches" (0.6).
- 0.8 - 1.0 → Products designed for treating, monitoring, or managing a specific medical condition (e.g., prescription drugs, medical aids).
  Example: "Blood glucose monitor" (1.0), "prescription eczema cream" (1.0).

Examples:
- "Moisturizing hand lotion with aloe vera" → 0.0 (General-use cosmetic, no sensitivity.)
- "Multivitamin with Vitamin D & Zinc for daily health" → 0.0 (A normal purchase for general wellness.)
- "Fragrance-free laundry detergent for sensitive skin" → 0.3 (Health-related but not condition-specific.)
- "Melatonin sleep aid gummies" → 0.4 (Used for sleep but not strictly medical.)
- "Prescription-strength corticosteroid cream for eczema relief" → 1.0 (Directly treats a medical condition.)

Instruction: Write only the score. Do not write anything else.

**Here is the product to score:**)";

// "1. a\n2. b\n..." over the history texts, in order.
inline std::string format_numbered_list(std::span<const std::string> texts) {
  std::string out;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (i > 0) out += '\n';
    out += std::to_string(i + 1) + ". " + texts[i];
  }
  return out;
}

namespace detail {

// Single pass: substituted values are never rescanned, so product text that
// happens to contain "{count}" is left untouched. Any other {identifier} left
// in the template is an error.
inline std::string substitute(std::string_view tmpl, std::string_view count,
                              std::string_view history) {
  std::string out;
  out.reserve(tmpl.size() + history.size());
  for (std::size_t i = 0; i < tmpl.size();) {
    if (tmpl[i] == '{') {
      const auto close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        const auto name = tmpl.substr(i + 1, close - i - 1);
        if (name == "count") {
          out += count;
          i = close + 1;
          continue;
        }
        if (name == "history") {
          out += history;
          i = close + 1;
          continue;
        }
        const bool identifier =
            !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
              return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
            });
        if (identifier) {
          throw Error(ErrorKind::kTemplate,
                      "unresolved placeholder {" + std::string(name) + "} in prompt template");
        }
      }
    }
    out.push_back(tmpl[i++]);
  }
  return out;
}

}  // namespace detail

inline RenderedPrompt render_prompt(const PromptTemplate& t, std::size_t count,
                                    std::span<const ProductText> history) {
  if (count < 1) throw Error(ErrorKind::kConfig, "render_prompt: count must be >= 1");
  if (history.empty()) throw Error(ErrorKind::kConfig, "render_prompt: history is empty");
  std::vector<std::string> texts;
  texts.reserve(history.size());
  for (const auto& h : history) texts.push_back(h.text);
  const std::string list = format_numbered_list(texts);
  const std::string n = std::to_string(count);
  return {detail::substitute(t.system_text, n, list),
          detail::substitute(t.user_text_template, n, list)};
}

}  // namespace privrec::gateway

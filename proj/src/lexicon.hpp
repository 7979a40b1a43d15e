#pragma once

#include <optional>
#include <string_view>

#include "evhan/text.hpp"

namespace evhan::text::lexicon {

/// Tag for a lowercased word from the bundled lexicon.
std::optional<Tag> lookup(std::string_view lower);
/// Forms of be/have/do and modals.
bool is_auxiliary(std::string_view lower);
/// Tokens that keep their trailing period (Inc., Mr., Jan., ...).
bool is_abbreviation(std::string_view lower_with_period);
/// Third-person pronouns that may be resolved to an antecedent.
bool is_resolvable_pronoun(std::string_view lower);

}  // namespace evhan::text::lexicon

#pragma once

#include "mspec/types.hpp"

#include <optional>
#include <span>

namespace mspec {

// Unit-cost Levenshtein distance over token ids, evaluated only inside the
// diagonal band |i - j| <= cap. Returns nullopt when the distance exceeds cap.
std::optional<int> edit_distance(std::span<const TokenId> a, std::span<const TokenId> b, int cap);

} // namespace mspec

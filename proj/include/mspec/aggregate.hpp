#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>

namespace mspec {

// Most frequent label; ties go to the label that occurred first.
std::string majority_vote(std::span<const std::string> answers);

// Highest-scoring label; ties go to the earliest.
std::string best_of_n(std::span<const std::string> answers, const std::function<double(const std::string &)> & scorer);

} // namespace mspec

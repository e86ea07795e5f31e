#include "mspec/aggregate.hpp"

#include <unordered_map>

namespace mspec {

std::string majority_vote(std::span<const std::string> answers) {
    if (answers.empty()) {
        throw std::invalid_argument("majority_vote: no answers");
    }
    std::unordered_map<std::string, int> counts;
    for (const auto & a : answers) {
        ++counts[a];
    }
    const std::string * best = nullptr;
    int best_count = 0;
    for (const auto & a : answers) {
        const int c = counts[a];
        if (c > best_count) {
            best = &a;
            best_count = c;
        }
    }
    return *best;
}

std::string best_of_n(std::span<const std::string> answers, const std::function<double(const std::string &)> & scorer) {
    if (answers.empty()) {
        throw std::invalid_argument("best_of_n: no answers");
    }
    std::size_t best = 0;
    double best_score = scorer(answers[0]);
    for (std::size_t i = 1; i < answers.size(); ++i) {
        const double s = scorer(answers[i]);
        if (s > best_score) {
            best = i;
            best_score = s;
        }
    }
    return answers[best];
}

} // namespace mspec

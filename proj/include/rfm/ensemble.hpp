#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rfm/checkpoint.hpp"
#include "rfm/meta.hpp"

namespace rfm {

/// One foundation model per integer reaction order.
using OrderBank = std::map<int, FoundationModel>;

struct Candidate {
    int order = 0;
    std::optional<AdaptResult> adapted;  // empty when adaptation failed
    std::string error;
};

/// Adapts every bank model independently; the residuals of each use that
/// model's order. Throws NumericalError only when every order fails.
std::vector<Candidate> adapt_all(const OrderBank& bank, const ShotSet& shots, const AdaptTarget& target,
                                 const AdaptConfig& cfg);

/// Index of the smallest value; ties go to the earliest index. Non-finite
/// values never win unless all are non-finite.
std::size_t select_min(std::span<const double> values);

struct EnsembleResult {
    std::vector<int> orders;
    std::vector<double> validation_mse;  // +inf for failed candidates
    std::size_t selected = 0;
    int selected_order = 0;
    RnnParams selected_params;
};

/// Scores each candidate on the validation samples and keeps the minimum.
EnsembleResult min_vote(const std::vector<Candidate>& candidates, std::span<const ModelIO> validation);

/// Shots used for adaptation and for voting. With K >= 5 the last
/// ceil(K/5) shots are held out; otherwise both sets are all shots.
struct ValidationSplit {
    ShotSet train;
    std::vector<Sample> validation;
};

ValidationSplit split_validation(const ShotSet& shots);

std::string ensemble_to_json(const EnsembleResult& r, int true_order = 0);

}  // namespace rfm

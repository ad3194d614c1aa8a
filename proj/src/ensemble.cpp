#include "rfm/ensemble.hpp"

#include <cmath>
#include <limits>

#include <json.hpp>

#include "rfm/errors.hpp"

namespace rfm {

std::vector<Candidate> adapt_all(const OrderBank& bank, const ShotSet& shots, const AdaptTarget& target,
                                 const AdaptConfig& cfg) {
    if (bank.empty()) throw std::invalid_argument("order bank is empty");
    std::vector<Candidate> out;
    out.reserve(bank.size());
    for (const auto& [order, model] : bank) {
        Candidate c;
        c.order = order;
        AdaptTarget t = target;
        t.est.order = order;
        t.norm = model.norm(target.kind);
        try {
            c.adapted = adapt(model.params, shots, t, cfg);
        } catch (const NumericalError& e) {
            c.error = e.what();
        }
        out.push_back(std::move(c));
    }
    for (const auto& c : out)
        if (c.adapted) return out;
    throw NumericalError("ensemble.adapt_all", "adaptation failed for every order");
}

std::size_t select_min(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("select_min on an empty list");
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        const bool best_ok = std::isfinite(values[best]);
        if (!std::isfinite(values[i])) continue;
        if (!best_ok || values[i] < values[best]) best = i;
    }
    return best;
}

EnsembleResult min_vote(const std::vector<Candidate>& candidates, std::span<const ModelIO> validation) {
    if (candidates.empty()) throw std::invalid_argument("min_vote needs at least one candidate");
    if (validation.empty()) throw EmptyValidation("validation set is empty");
    EnsembleResult r;
    for (const auto& c : candidates) {
        r.orders.push_back(c.order);
        r.validation_mse.push_back(c.adapted ? evaluate_mse(c.adapted->params, validation)
                                             : std::numeric_limits<double>::infinity());
    }
    r.selected = select_min(r.validation_mse);
    const auto& chosen = candidates[r.selected];
    if (!chosen.adapted) throw NumericalError("ensemble.min_vote", "no candidate could be scored");
    r.selected_order = chosen.order;
    r.selected_params = chosen.adapted->params;
    return r;
}

ValidationSplit split_validation(const ShotSet& shots) {
    ValidationSplit s;
    s.train.collocation = shots.collocation;
    const std::size_t K = shots.shots.size();
    if (K >= 5) {
        const std::size_t hold = (K + 4) / 5;
        s.train.shots.assign(shots.shots.begin(), shots.shots.end() - static_cast<std::ptrdiff_t>(hold));
        s.validation.assign(shots.shots.end() - static_cast<std::ptrdiff_t>(hold), shots.shots.end());
    } else {
        s.train.shots = shots.shots;
        s.validation = shots.shots;
    }
    return s;
}

std::string ensemble_to_json(const EnsembleResult& r, int true_order) {
    nlohmann::json j;
    j["selected_order"] = r.selected_order;
    if (true_order > 0) j["true_order"] = true_order;
    auto& c = j["candidates"] = nlohmann::json::array();
    for (std::size_t i = 0; i < r.orders.size(); ++i) {
        nlohmann::json e{{"order", r.orders[i]}};
        if (std::isfinite(r.validation_mse[i])) {
            e["validation_mse"] = r.validation_mse[i];
        } else {
            e["validation_mse"] = nullptr;
        }
        c.push_back(e);
    }
    return j.dump(2);
}

}  // namespace rfm

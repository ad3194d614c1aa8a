#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include <json.hpp>

#include "rfm/ensemble.hpp"
#include "rfm/errors.hpp"

using namespace rfm;

namespace {

const Architecture kSmall{4, {6}, 2};

FoundationModel model_of(std::uint64_t seed, int order) {
    FoundationModel m;
    m.params = init_params(kSmall, seed);
    m.provenance = {{{ReactorKind::Cstr, order, 1}}, seed, "reptile"};
    return m;
}

Candidate candidate(int order, const RnnParams& p) {
    Candidate c;
    c.order = order;
    c.adapted = AdaptResult{p, {}, 0};
    return c;
}

// Mean of squared errors written out element by element.
double direct_mse(const RnnParams& p, const std::vector<ModelIO>& val) {
    double s = 0.0;
    double n = 0.0;
    for (const auto& io : val) {
        Sequence x;
        for (const auto& in : io.inputs) x.push_back(Eigen::Map<const Eigen::Vector4d>(in.data()));
        const auto y = forward(p, x);
        for (std::size_t t = 0; t < y.size(); ++t)
            for (int k = 0; k < 2; ++k) {
                s += (y[t](k, 0) - io.targets[t][k]) * (y[t](k, 0) - io.targets[t][k]);
                n += 1.0;
            }
    }
    return s / n;
}

}  // namespace

TEST_CASE("select_min") {
    const std::vector<double> v{0.3, 0.1, 0.2};
    CHECK(select_min(v) == 1);
    const std::vector<double> tie{0.2, 0.1, 0.1};
    CHECK(select_min(tie) == 1);
    for (double c : {1e-6, 0.5, 3.0, 1e8}) {
        std::vector<double> s;
        for (double x : v) s.push_back(c * x);
        CHECK(select_min(s) == 1);
    }
    const double inf = std::numeric_limits<double>::infinity();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const std::vector<double> bad{inf, nan, 0.4, 0.5};
    CHECK(select_min(bad) == 2);
    const std::vector<double> all_bad{nan, inf};
    CHECK(select_min(all_bad) == 0);
    CHECK_THROWS(select_min(std::span<const double>{}));
}

TEST_CASE("validation split") {
    SimConfig sim;
    const auto task = sample_task(ReactorKind::Cstr, 1, 3);
    for (int K : {0, 1, 4, 5, 6, 10, 11, 23}) {
        CAPTURE(K);
        const auto s = draw_shot_set(task, K, 7, sim, 4);
        const auto v = split_validation(s);
        CHECK(v.train.collocation.size() == 7);
        if (K >= 5) {
            const auto hold = static_cast<std::size_t>(std::ceil(K / 5.0));
            CHECK(v.validation.size() == hold);
            CHECK(v.train.shots.size() + hold == static_cast<std::size_t>(K));
            CHECK(v.validation.front().x0.T == s.shots[static_cast<std::size_t>(K) - hold].x0.T);
        } else {
            CHECK(v.validation.size() == static_cast<std::size_t>(K));
            CHECK(v.train.shots.size() == static_cast<std::size_t>(K));
        }
    }
}

TEST_CASE("min_vote") {
    SimConfig sim;
    const auto td = draw_feasible_task(ReactorKind::Cstr, 2, 6, sim, 5);
    const std::vector<ModelIO>& val = td.samples;

    SUBCASE("scores match an element-wise recomputation and the argmin is kept") {
        std::vector<Candidate> cands{candidate(1, init_params(kSmall, 1)), candidate(2, init_params(kSmall, 2)),
                                     candidate(3, init_params(kSmall, 3))};
        const auto r = min_vote(cands, val);
        REQUIRE(r.validation_mse.size() == 3);
        for (std::size_t i = 0; i < 3; ++i)
            CHECK(r.validation_mse[i] == doctest::Approx(direct_mse(cands[i].adapted->params, val)).epsilon(1e-12));
        for (double m : r.validation_mse) CHECK(r.validation_mse[r.selected] <= m);
        CHECK(r.selected_order == r.orders[r.selected]);
        CHECK(flatten(r.selected_params) == flatten(cands[r.selected].adapted->params));
    }

    SUBCASE("exact tie goes to the lowest order") {
        const auto p = init_params(kSmall, 9);
        const auto r = min_vote({candidate(1, init_params(kSmall, 8)), candidate(2, p), candidate(3, p)}, val);
        if (r.validation_mse[0] > r.validation_mse[1]) CHECK(r.selected_order == 2);
        CHECK(r.validation_mse[1] == r.validation_mse[2]);
    }

    SUBCASE("failed candidates are skipped") {
        Candidate failed;
        failed.order = 1;
        failed.error = "boom";
        const auto r = min_vote({failed, candidate(2, init_params(kSmall, 4))}, val);
        CHECK(std::isinf(r.validation_mse[0]));
        CHECK(r.selected_order == 2);
        const auto j = nlohmann::json::parse(ensemble_to_json(r, 2));
        CHECK(j["selected_order"] == 2);
        CHECK(j["true_order"] == 2);
        CHECK(j["candidates"][0]["validation_mse"].is_null());
        CHECK(j["candidates"][1]["validation_mse"].get<double>() == r.validation_mse[1]);
    }

    SUBCASE("empty validation") {
        CHECK_THROWS_AS(min_vote({candidate(1, init_params(kSmall, 1))}, std::span<const ModelIO>{}), EmptyValidation);
    }
}

TEST_CASE("adapt_all") {
    SimConfig sim;
    const auto td = draw_feasible_task(ReactorKind::Cstr, 2, 4, sim, 15);
    const auto shots = draw_shot_set(td.task, 5, 6, sim, 16);
    const auto target = make_adapt_target(td.task, sim);
    AdaptConfig cfg;
    cfg.epochs = 3;

    SUBCASE("bank of one is trivially selected") {
        const OrderBank bank{{2, model_of(1, 2)}};
        const auto c = adapt_all(bank, shots, target, cfg);
        REQUIRE(c.size() == 1);
        const auto split = split_validation(shots);
        std::vector<ModelIO> val;
        for (const auto& s : split.validation) val.push_back(build_model_io(td.task, s));
        CHECK(min_vote(c, val).selected_order == 2);
    }

    SUBCASE("each order adapts independently with its own residual order") {
        const OrderBank bank{{1, model_of(1, 1)}, {2, model_of(2, 2)}, {3, model_of(3, 3)}};
        const auto c = adapt_all(bank, shots, target, cfg);
        REQUIRE(c.size() == 3);
        for (std::size_t i = 0; i < 3; ++i) {
            const int order = static_cast<int>(i) + 1;
            CHECK(c[i].order == order);
            REQUIRE(c[i].adapted.has_value());
            auto t = target;
            t.est.order = order;
            const auto alone = adapt(bank.at(order).params, shots, t, cfg);
            CHECK(flatten(alone.params) == flatten(c[i].adapted->params));
            for (const auto& l : c[i].adapted->trace) CHECK(std::isfinite(l.total));
        }
        // bank membership does not change a candidate
        const OrderBank two{{2, model_of(2, 2)}};
        CHECK(flatten(adapt_all(two, shots, target, cfg)[0].adapted->params) == flatten(c[1].adapted->params));
    }

    SUBCASE("empty bank") { CHECK_THROWS(adapt_all({}, shots, target, cfg)); }
}

#include "rfm/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "rfm/errors.hpp"

namespace rfm {

namespace {

using nlohmann::json;
using Handler = std::function<void(const json&)>;

void apply(const json& j, const std::string& where, std::initializer_list<std::pair<const char*, Handler>> fields) {
    if (!j.is_object()) throw ConfigError("'" + where + "' must be an object");
    for (const auto& [key, value] : j.items()) {
        auto it = std::find_if(fields.begin(), fields.end(), [&](const auto& f) { return key == f.first; });
        if (it == fields.end()) throw ConfigError("unknown key '" + key + "' in '" + where + "'");
        try {
            it->second(value);
        } catch (const ConfigError&) {
            throw;
        } catch (const json::exception& e) {
            throw ConfigError("bad value for '" + where + "." + key + "': " + e.what());
        } catch (const std::invalid_argument& e) {
            throw ConfigError("bad value for '" + where + "." + key + "': " + e.what());
        }
    }
}

template <class T>
Handler set(T& target) {
    return [&target](const json& v) { target = v.get<T>(); };
}

Handler set_kinds(std::vector<ReactorKind>& target) {
    return [&target](const json& v) {
        target.clear();
        for (const auto& k : v) target.push_back(parse_kind(k.get<std::string>()));
    };
}

Handler set_path(std::filesystem::path& target) {
    return [&target](const json& v) { target = v.get<std::string>(); };
}

json kinds_json(const std::vector<ReactorKind>& kinds) {
    json a = json::array();
    for (auto k : kinds) a.push_back(std::string(to_string(k)));
    return a;
}

}  // namespace

std::filesystem::path ExperimentConfig::foundation_path() const {
    return paths.foundation.empty() ? paths.out / "foundation.ckpt" : paths.foundation;
}

std::filesystem::path ExperimentConfig::transfer_path() const {
    return paths.transfer.empty() ? paths.out / "transfer.ckpt" : paths.transfer;
}

std::filesystem::path ExperimentConfig::bank_path(int order) const {
    const auto dir = paths.bank_dir.empty() ? paths.out : paths.bank_dir;
    return dir / ("bank_order" + std::to_string(order) + ".ckpt");
}

MetaConfig ExperimentConfig::meta_config(int fixed_order) const {
    MetaConfig m;
    for (auto k : meta.kinds) m.families.push_back({k, fixed_order > 0 ? fixed_order : this->order(k), meta.tasks_per_kind});
    m.samples_per_task = meta.samples_per_task;
    m.n_epochs = meta.n_epochs;
    m.batch_size = meta.batch_size;
    m.epsilon = meta.epsilon;
    m.adam.lr = meta.lr;
    m.sim = sim;
    m.seed = fixed_order > 0 ? derive_seed(seed, {0xba4bULL, static_cast<std::uint64_t>(fixed_order)}) : seed;
    return m;
}

AdaptConfig ExperimentConfig::adapt_config(AdaptMode mode) const {
    AdaptConfig a;
    a.epochs = adapt.epochs;
    a.weights = adapt.weights;
    a.mode = mode;
    a.adam.lr = adapt.lr;
    a.resample = adapt.resample;
    return a;
}

ExperimentConfig preset(Scale scale) {
    ExperimentConfig c;
    if (scale == Scale::Desk) {
        c.meta.tasks_per_kind = 30;
        c.meta.n_epochs = 30;
        c.adapt.epochs = 2000;
        c.n_unseen_tasks = 3;
        c.n_seeds = 3;
    } else {
        c.meta.tasks_per_kind = 500;
        c.n_unseen_tasks = 5;
        c.n_seeds = 5;
    }
    return c;
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig c) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    apply(j, "config",
          {
              {"experiment", set(c.experiment)},
              {"seed", set(c.seed)},
              {"kinds", set_kinds(c.kinds)},
              {"orders",
               [&](const json& v) {
                   apply(v, "orders",
                         {{"cstr", set(c.orders[0])}, {"batch", set(c.orders[1])}, {"pfr", set(c.orders[2])}});
               }},
              {"methods", set(c.methods)},
              {"shot_grid", set(c.shot_grid)},
              {"collocation_grid", set(c.collocation_grid)},
              {"fixed_shots", set(c.fixed_shots)},
              {"fixed_collocations", set(c.fixed_collocations)},
              {"n_unseen_tasks", set(c.n_unseen_tasks)},
              {"n_seeds", set(c.n_seeds)},
              {"test_samples", set(c.test_samples)},
              {"workers", set(c.workers)},
              {"meta",
               [&](const json& v) {
                   apply(v, "meta",
                         {{"kinds", set_kinds(c.meta.kinds)},
                          {"tasks_per_kind", set(c.meta.tasks_per_kind)},
                          {"samples_per_task", set(c.meta.samples_per_task)},
                          {"n_epochs", set(c.meta.n_epochs)},
                          {"batch_size", set(c.meta.batch_size)},
                          {"epsilon", set(c.meta.epsilon)},
                          {"lr", set(c.meta.lr)}});
               }},
              {"adapt",
               [&](const json& v) {
                   apply(v, "adapt",
                         {{"epochs", set(c.adapt.epochs)},
                          {"lr", set(c.adapt.lr)},
                          {"residual_units",
                           [&](const json& u) {
                               const auto name = u.get<std::string>();
                               if (name == "physical") {
                                   c.adapt.residual_units = ResidualUnits::Physical;
                               } else if (name == "op_range") {
                                   c.adapt.residual_units = ResidualUnits::OpRange;
                               } else {
                                   throw ConfigError("adapt.residual_units must be 'physical' or 'op_range'");
                               }
                           }},
                          {"weights",
                           [&](const json& w) {
                               apply(w, "adapt.weights",
                                     {{"g1", set(c.adapt.weights.g1)},
                                      {"g2", set(c.adapt.weights.g2)},
                                      {"g3", set(c.adapt.weights.g3)}});
                           }},
                          {"resample", [&](const json& r) {
                               apply(r, "adapt.resample",
                                     {{"enabled", set(c.adapt.resample.enabled)},
                                      {"patience", set(c.adapt.resample.patience)},
                                      {"rel_tol", set(c.adapt.resample.rel_tol)}});
                           }}});
               }},
              {"sim",
               [&](const json& v) {
                   apply(v, "sim",
                         {{"n_out", set(c.sim.n_out)},
                          {"min_attempts_for_infeasible", set(c.sim.min_attempts_for_infeasible)},
                          {"max_rejection_rate", set(c.sim.max_rejection_rate)},
                          {"limits", [&](const json& l) {
                               apply(l, "sim.limits",
                                     {{"T_max", set(c.sim.limits.T_max)},
                                      {"big_max", set(c.sim.limits.big_max)},
                                      {"eps_CA", set(c.sim.limits.eps_CA)},
                                      {"arrhenius_floor", set(c.sim.limits.arrhenius_floor)}});
                           }}});
               }},
              {"ensemble",
               [&](const json& v) {
                   apply(v, "ensemble",
                         {{"bank_orders", set(c.ensemble.bank_orders)}, {"trials", set(c.ensemble.trials)}});
               }},
              {"rollout", [&](const json& v) { apply(v, "rollout", {{"periods", set(c.rollout.periods)}}); }},
              {"paths",
               [&](const json& v) {
                   apply(v, "paths",
                         {{"out", set_path(c.paths.out)},
                          {"foundation", set_path(c.paths.foundation)},
                          {"transfer", set_path(c.paths.transfer)},
                          {"bank_dir", set_path(c.paths.bank_dir)}});
               }},
          });
    validate(c);
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str(), std::move(base));
}

std::string config_to_json(const ExperimentConfig& c) {
    json j;
    j["experiment"] = c.experiment;
    j["seed"] = c.seed;
    j["kinds"] = kinds_json(c.kinds);
    j["orders"] = {{"cstr", c.orders[0]}, {"batch", c.orders[1]}, {"pfr", c.orders[2]}};
    j["methods"] = c.methods;
    j["shot_grid"] = c.shot_grid;
    j["collocation_grid"] = c.collocation_grid;
    j["fixed_shots"] = c.fixed_shots;
    j["fixed_collocations"] = c.fixed_collocations;
    j["n_unseen_tasks"] = c.n_unseen_tasks;
    j["n_seeds"] = c.n_seeds;
    j["test_samples"] = c.test_samples;
    j["workers"] = c.workers;
    j["meta"] = {{"kinds", kinds_json(c.meta.kinds)},       {"tasks_per_kind", c.meta.tasks_per_kind},
                 {"samples_per_task", c.meta.samples_per_task}, {"n_epochs", c.meta.n_epochs},
                 {"batch_size", c.meta.batch_size},          {"epsilon", c.meta.epsilon},
                 {"lr", c.meta.lr}};
    j["adapt"] = {{"epochs", c.adapt.epochs},
                  {"lr", c.adapt.lr},
                  {"residual_units", c.adapt.residual_units == ResidualUnits::Physical ? "physical" : "op_range"},
                  {"weights", {{"g1", c.adapt.weights.g1}, {"g2", c.adapt.weights.g2}, {"g3", c.adapt.weights.g3}}},
                  {"resample",
                   {{"enabled", c.adapt.resample.enabled},
                    {"patience", c.adapt.resample.patience},
                    {"rel_tol", c.adapt.resample.rel_tol}}}};
    j["sim"] = {{"n_out", c.sim.n_out},
                {"min_attempts_for_infeasible", c.sim.min_attempts_for_infeasible},
                {"max_rejection_rate", c.sim.max_rejection_rate},
                {"limits",
                 {{"T_max", c.sim.limits.T_max},
                  {"big_max", c.sim.limits.big_max},
                  {"eps_CA", c.sim.limits.eps_CA},
                  {"arrhenius_floor", c.sim.limits.arrhenius_floor}}}};
    j["ensemble"] = {{"bank_orders", c.ensemble.bank_orders}, {"trials", c.ensemble.trials}};
    j["rollout"] = {{"periods", c.rollout.periods}};
    j["paths"] = {{"out", c.paths.out.string()},
                  {"foundation", c.paths.foundation.string()},
                  {"transfer", c.paths.transfer.string()},
                  {"bank_dir", c.paths.bank_dir.string()}};
    return j.dump(2);
}

void validate(const ExperimentConfig& c) {
    static const std::set<std::string> experiments{"fewshot_sweep", "collocation_sweep", "rollout",
                                                   "ensemble_sweep", "meta_train",       "transfer_train"};
    static const std::set<std::string> methods{"scratch-data", "transfer", "reptile-data", "scratch-physics",
                                               "reptile-physics"};
    auto need = [](bool ok, const std::string& msg) {
        if (!ok) throw ConfigError(msg);
    };
    need(experiments.count(c.experiment) == 1, "unknown experiment '" + c.experiment + "'");
    need(!c.kinds.empty(), "kinds must not be empty");
    for (int o : c.orders) need(o >= 1, "reaction orders must be >= 1");
    need(!c.methods.empty(), "methods must not be empty");
    for (const auto& m : c.methods) need(methods.count(m) == 1, "unknown method '" + m + "'");
    need(!c.shot_grid.empty(), "shot_grid must not be empty");
    need(!c.collocation_grid.empty(), "collocation_grid must not be empty");
    for (int k : c.shot_grid) need(k >= 0, "shot counts must be >= 0");
    for (int m : c.collocation_grid) need(m >= 0, "collocation counts must be >= 0");
    need(c.fixed_shots >= 0 && c.fixed_collocations >= 0, "fixed shot/collocation counts must be >= 0");
    need(c.n_unseen_tasks >= 1, "n_unseen_tasks must be >= 1");
    need(c.n_seeds >= 1, "n_seeds must be >= 1");
    need(c.test_samples >= 1, "test_samples must be >= 1");
    need(!c.meta.kinds.empty(), "meta.kinds must not be empty");
    need(c.meta.tasks_per_kind >= 1, "meta.tasks_per_kind must be >= 1");
    need(c.meta.samples_per_task >= 1, "meta.samples_per_task must be >= 1");
    need(c.meta.n_epochs >= 0, "meta.n_epochs must be >= 0");
    need(c.meta.batch_size >= 1, "meta.batch_size must be >= 1");
    need(c.meta.epsilon > 0.0, "meta.epsilon must be > 0");
    need(c.meta.lr > 0.0 && c.adapt.lr > 0.0, "learning rates must be > 0");
    need(c.adapt.epochs >= 0, "adapt.epochs must be >= 0");
    const auto& w = c.adapt.weights;
    need(w.g1 >= 0.0 && w.g2 >= 0.0 && w.g3 >= 0.0, "loss weights must be >= 0");
    need(c.sim.n_out >= 1, "sim.n_out must be >= 1");
    need(!c.ensemble.bank_orders.empty(), "ensemble.bank_orders must not be empty");
    std::set<int> seen;
    for (int o : c.ensemble.bank_orders) {
        need(o >= 1, "bank orders must be >= 1");
        need(seen.insert(o).second, "bank orders must be distinct");
    }
    need(c.ensemble.trials >= 1, "ensemble.trials must be >= 1");
    need(c.rollout.periods >= 1, "rollout.periods must be >= 1");
}

}  // namespace rfm

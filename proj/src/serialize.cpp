#include "betarce/serialize.hpp"

#include "betarce/errors.hpp"

namespace betarce {

Json to_json(const Vector& v) {
    Json j = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
    return j;
}

Vector vector_from_json(const Json& j) {
    if (!j.is_array()) throw SchemaError("expected a numeric array");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    return v;
}

Json to_json(const ArchConfig& c) {
    return Json{{"model", to_string(c.model)},
                {"layers", c.layers},
                {"neurons_per_layer", c.neurons_per_layer},
                {"learning_rate", c.learning_rate},
                {"max_epochs", c.max_epochs},
                {"batch_size", c.batch_size},
                {"patience", c.patience},
                {"dropout", c.dropout},
                {"seed", c.seed}};
}

ArchConfig arch_config_from_json(const Json& j, ArchConfig c) {
    if (j.contains("model")) c.model = model_kind_from_string(j["model"].get<std::string>());
    c.layers = j.value("layers", c.layers);
    c.neurons_per_layer = j.value("neurons_per_layer", c.neurons_per_layer);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.patience = j.value("patience", c.patience);
    c.dropout = j.value("dropout", c.dropout);
    c.seed = j.value("seed", c.seed);
    return c;
}

Json to_json(const ModelSpaceSpec& s) {
    Json j{{"change_type", to_string(s.change_type)}, {"base", to_json(s.base)}, {"split_seed", s.split_seed}};
    if (s.change_type == ChangeType::Architecture) {
        j["layer_range"] = {s.layer_range.lo, s.layer_range.hi};
        j["neuron_range"] = {s.neuron_range.lo, s.neuron_range.hi};
    }
    return j;
}

ModelSpaceSpec model_space_from_json(const Json& j, ModelSpaceSpec s) {
    if (j.contains("change_type")) s.change_type = change_type_from_string(j["change_type"].get<std::string>());
    if (j.contains("base")) s.base = arch_config_from_json(j["base"], s.base);
    if (j.contains("layer_range")) s.layer_range = {j["layer_range"][0].get<int>(), j["layer_range"][1].get<int>()};
    if (j.contains("neuron_range")) s.neuron_range = {j["neuron_range"][0].get<int>(), j["neuron_range"][1].get<int>()};
    s.split_seed = j.value("split_seed", s.split_seed);
    return s;
}

Json to_json(const TrainingSetting& s) {
    Json j{{"change", s.change ? Json(to_string(*s.change)) : Json(nullptr)},
           {"config", to_json(s.config)},
           {"split_seed", s.split_seed}};
    j["bootstrap_seed"] = s.bootstrap_seed ? Json(*s.bootstrap_seed) : Json(nullptr);
    return j;
}

TrainingSetting training_setting_from_json(const Json& j) {
    TrainingSetting s;
    if (j.contains("change") && !j["change"].is_null()) s.change = change_type_from_string(j["change"].get<std::string>());
    s.config = arch_config_from_json(j.at("config"));
    s.split_seed = j.at("split_seed").get<std::uint64_t>();
    if (j.contains("bootstrap_seed") && !j["bootstrap_seed"].is_null())
        s.bootstrap_seed = j["bootstrap_seed"].get<std::uint64_t>();
    return s;
}

Json to_json(const BetaPosterior& p) { return Json{{"a", p.a}, {"b", p.b}}; }

Json to_json(const VerificationOutcome& o) {
    return Json{{"robust", o.robust}, {"posterior", to_json(o.posterior)}, {"successes", o.successes}, {"trials", o.trials}};
}

VerificationOutcome verification_outcome_from_json(const Json& j) {
    VerificationOutcome o;
    o.robust = j.at("robust").get<bool>();
    o.posterior = BetaPosterior{j.at("posterior").at("a").get<double>(), j.at("posterior").at("b").get<double>()};
    o.successes = j.at("successes").get<int>();
    o.trials = j.at("trials").get<int>();
    return o;
}

Json to_json(const CfeRecord& r) {
    Json j{{"status", to_string(r.status)},
           {"x_orig", to_json(r.x_orig)},
           {"y_orig", r.y_orig},
           {"target_class", r.target_class},
           {"dist_to_base", r.dist_to_base},
           {"search_stats",
            {{"annuli", r.search_stats.annuli},
             {"candidates", r.search_stats.candidates},
             {"robustness_checks", r.search_stats.robustness_checks}}}};
    j["x_base"] = r.status == CfeStatus::BaseNotFound ? Json(nullptr) : to_json(r.x_base);
    j["x_robust"] = r.x_robust ? to_json(*r.x_robust) : Json(nullptr);
    j["outcome"] = r.outcome ? to_json(*r.outcome) : Json(nullptr);
    return j;
}

CfeRecord cfe_record_from_json(const Json& j) {
    CfeRecord r;
    r.status = cfe_status_from_string(j.at("status").get<std::string>());
    r.x_orig = vector_from_json(j.at("x_orig"));
    r.y_orig = j.at("y_orig").get<int>();
    r.target_class = j.at("target_class").get<int>();
    r.dist_to_base = j.at("dist_to_base").get<double>();
    if (!j.at("x_base").is_null()) r.x_base = vector_from_json(j["x_base"]);
    if (!j.at("x_robust").is_null()) r.x_robust = vector_from_json(j["x_robust"]);
    if (!j.at("outcome").is_null()) r.outcome = verification_outcome_from_json(j["outcome"]);
    const auto& st = j.at("search_stats");
    r.search_stats = {st.at("annuli").get<int>(), st.at("candidates").get<long>(), st.at("robustness_checks").get<long>()};
    return r;
}

}  // namespace betarce

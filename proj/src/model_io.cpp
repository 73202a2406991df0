#include <fstream>
#include <sstream>

#include <json.hpp>

#include "shapeboost/boost.hpp"
#include "shapeboost/error.hpp"

namespace shapeboost {

namespace {

using Json = nlohmann::ordered_json;

constexpr const char* kFormatTag = "shapeboost-model";
constexpr int kFormatVersion = 1;

Json grid_json(const KnotGrid& g) {
    return Json{{"inner", g.inner}, {"lower", g.lower}, {"upper", g.upper}, {"degree", g.degree}, {"cyclic", g.cyclic}};
}

KnotGrid grid_from(const Json& j) {
    KnotGrid g;
    g.inner = j.at("inner").get<std::vector<double>>();
    g.lower = j.at("lower").get<double>();
    g.upper = j.at("upper").get<double>();
    g.degree = j.at("degree").get<int>();
    g.cyclic = j.at("cyclic").get<bool>();
    return g;
}

Json margin_json(const MarginSpec& m) {
    Json j{{"n_inner", m.n_inner},
           {"degree", m.degree},
           {"diff_order", m.diff_order},
           {"constraint", to_string(m.constraint)},
           {"constraint_lambda", m.constraint_lambda},
           {"lo", m.lo},
           {"hi", m.hi}};
    j["range"] = m.range ? Json::array({m.range->first, m.range->second}) : Json(nullptr);
    j["grid"] = m.grid ? grid_json(*m.grid) : Json(nullptr);
    return j;
}

MarginSpec margin_from(const Json& j) {
    MarginSpec m;
    m.n_inner = j.at("n_inner").get<int>();
    m.degree = j.at("degree").get<int>();
    m.diff_order = j.at("diff_order").get<int>();
    m.constraint = parse_constraint(j.at("constraint").get<std::string>());
    m.constraint_lambda = j.at("constraint_lambda").get<double>();
    m.lo = j.at("lo").get<double>();
    m.hi = j.at("hi").get<double>();
    if (!j.at("range").is_null()) {
        const auto r = j.at("range").get<std::vector<double>>();
        if (r.size() != 2) throw FormatError("range must have two entries");
        m.range = std::pair{r[0], r[1]};
    }
    if (!j.at("grid").is_null()) m.grid = grid_from(j.at("grid"));
    return m;
}

Json spec_json(const LearnerSpec& s) {
    Json j{{"name", s.name},
           {"kind", to_string(s.kind)},
           {"covariates", s.covariates},
           {"target_df", s.target_df},
           {"intercept", s.intercept},
           {"n_levels", s.n_levels},
           {"solver", to_string(s.solver)},
           {"hard_bounds", s.hard_bounds}};
    if (s.boundary) {
        j["boundary"] = Json{{"order", s.boundary->order},
                             {"n_edge", s.boundary->n_edge},
                             {"sides", to_string(s.boundary->sides)},
                             {"lambda", s.boundary->lambda}};
    } else {
        j["boundary"] = nullptr;
    }
    Json margins = Json::array();
    for (const auto& m : s.margins) margins.push_back(margin_json(m));
    j["margins"] = std::move(margins);
    j["center"] = s.center;
    return j;
}

LearnerSpec spec_from(const Json& j) {
    LearnerSpec s;
    s.name = j.at("name").get<std::string>();
    s.kind = parse_learner_kind(j.at("kind").get<std::string>());
    s.covariates = j.at("covariates").get<std::vector<std::string>>();
    s.target_df = j.at("target_df").get<double>();
    s.intercept = j.at("intercept").get<bool>();
    s.n_levels = j.at("n_levels").get<int>();
    s.solver = parse_solver(j.at("solver").get<std::string>());
    s.hard_bounds = j.at("hard_bounds").get<bool>();
    if (!j.at("boundary").is_null()) {
        const auto& b = j.at("boundary");
        s.boundary = BoundarySpec{b.at("order").get<int>(), b.at("n_edge").get<int>(),
                                  parse_sides(b.at("sides").get<std::string>()), b.at("lambda").get<double>()};
    }
    for (const auto& m : j.at("margins")) s.margins.push_back(margin_from(m));
    s.center = j.at("center").get<std::vector<double>>();
    return s;
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

} // namespace

std::string save_model(const BoostModel& model) {
    Json j;
    j["format"] = kFormatTag;
    j["version"] = kFormatVersion;
    j["loss"] = to_string(model.loss());
    j["response"] = model.response();
    j["config"] = Json{{"step", model.config().step}, {"m_stop", model.config().m_stop}, {"seed", model.config().seed}};
    j["offset"] = model.offset();
    j["n_learners"] = model.learners().size();
    Json learners = Json::array();
    for (std::size_t l = 0; l < model.learners().size(); ++l) {
        Json lj = spec_json(model.learners()[l]->spec());
        lj["beta"] = to_std(model.coefficients().beta[l]);
        learners.push_back(std::move(lj));
    }
    j["learners"] = std::move(learners);
    j["trace"] = model.trace();
    return j.dump(1) + "\n";
}

BoostModel load_model(std::string_view text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::exception& e) {
        throw FormatError(std::string("model file is not valid JSON: ") + e.what());
    }
    try {
        if (!j.is_object() || j.value("format", std::string()) != kFormatTag)
            throw FormatError("not a shapeboost model file");
        const int version = j.at("version").get<int>();
        if (version != kFormatVersion)
            throw FormatError("unsupported model version " + std::to_string(version) + " (expected " +
                              std::to_string(kFormatVersion) + ")");
        const LossKind loss = parse_loss(j.at("loss").get<std::string>());
        BoostConfig cfg;
        cfg.step = j.at("config").at("step").get<double>();
        cfg.m_stop = j.at("config").at("m_stop").get<int>();
        cfg.seed = j.at("config").at("seed").get<std::uint64_t>();
        cfg.validate();

        const auto& lj = j.at("learners");
        const auto declared = j.at("n_learners").get<std::size_t>();
        if (!lj.is_array() || lj.size() != declared)
            throw FormatError("model declares " + std::to_string(declared) + " learners but holds " +
                              std::to_string(lj.is_array() ? lj.size() : 0));
        std::vector<std::shared_ptr<const LearnerBlueprint>> learners;
        std::vector<Eigen::Index> sizes;
        for (const auto& item : lj) {
            learners.push_back(LearnerBlueprint::from_resolved(spec_from(item)));
            sizes.push_back(learners.back()->n_coef());
        }
        CoefficientStore coef(sizes);
        for (std::size_t l = 0; l < learners.size(); ++l) {
            const auto beta = lj[l].at("beta").get<std::vector<double>>();
            if (static_cast<Eigen::Index>(beta.size()) != sizes[l])
                throw FormatError("learner '" + learners[l]->spec().name + "' has " + std::to_string(beta.size()) +
                                  " coefficients, expected " + std::to_string(sizes[l]));
            coef.beta[l] = Eigen::Map<const Vector>(beta.data(), sizes[l]);
        }
        auto trace = j.at("trace").get<std::vector<int>>();
        if (static_cast<int>(trace.size()) != cfg.m_stop)
            throw FormatError("trace length " + std::to_string(trace.size()) + " differs from mstop " +
                              std::to_string(cfg.m_stop));
        for (int t : trace)
            if (t < 0 || static_cast<std::size_t>(t) >= learners.size())
                throw FormatError("trace refers to unknown learner " + std::to_string(t));
        return BoostModel(loss, cfg, j.at("response").get<std::string>(), j.at("offset").get<double>(),
                          std::move(learners), std::move(coef), std::move(trace));
    } catch (const FormatError&) {
        throw;
    } catch (const Json::exception& e) {
        throw FormatError(std::string("corrupt model file: ") + e.what());
    } catch (const InputError& e) {
        throw FormatError(std::string("corrupt model file: ") + e.what());
    }
}

void save_model_file(const BoostModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << save_model(model);
    if (!out) throw InputError("failed writing '" + path + "'");
}

BoostModel load_model_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open model file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_model(buf.str());
}

} // namespace shapeboost

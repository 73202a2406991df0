#include "shapeboost/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "shapeboost/error.hpp"

namespace shapeboost {

namespace {

void check_keys(const YAML::Node& node, const std::set<std::string>& allowed, const std::string& where) {
    if (!node.IsMap()) throw InputError(where + ": expected a mapping");
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (!allowed.count(key)) throw InputError(where + ": unknown key '" + key + "'");
    }
}

template <typename T>
T get(const YAML::Node& node, const std::string& key, const std::string& where, T fallback) {
    const YAML::Node v = node[key];
    if (!v) return fallback;
    try {
        return v.as<T>();
    } catch (const YAML::Exception&) {
        throw InputError(where + ": bad value for '" + key + "'");
    }
}

std::pair<double, double> get_pair(const YAML::Node& node, const std::string& key, const std::string& where) {
    const YAML::Node v = node[key];
    if (!v.IsSequence() || v.size() != 2) throw InputError(where + ": '" + key + "' must be a two-element list");
    try {
        return {v[0].as<double>(), v[1].as<double>()};
    } catch (const YAML::Exception&) {
        throw InputError(where + ": bad value for '" + key + "'");
    }
}

const std::set<std::string> kMarginKeys{"knots", "degree", "diff_order", "constraint", "constraint_lambda",
                                        "bounds", "range"};

MarginSpec parse_margin(const YAML::Node& node, const std::string& where, Constraint fallback) {
    MarginSpec m;
    m.n_inner = get(node, "knots", where, m.n_inner);
    m.degree = get(node, "degree", where, m.degree);
    m.diff_order = get(node, "diff_order", where, m.diff_order);
    m.constraint = node["constraint"] ? parse_constraint(get<std::string>(node, "constraint", where, ""))
                                      : fallback;
    m.constraint_lambda = get(node, "constraint_lambda", where, m.constraint_lambda);
    if (node["bounds"]) std::tie(m.lo, m.hi) = get_pair(node, "bounds", where);
    if (node["range"]) m.range = get_pair(node, "range", where);
    return m;
}

LearnerSpec parse_term(const YAML::Node& node, std::size_t index) {
    std::string where = "term " + std::to_string(index + 1);
    std::set<std::string> allowed{"name", "kind", "covariates", "df", "intercept", "levels", "solver",
                                  "hard_bounds", "boundary", "margins"};
    allowed.insert(kMarginKeys.begin(), kMarginKeys.end());
    check_keys(node, allowed, where);
    LearnerSpec s;
    if (!node["kind"]) throw InputError(where + ": missing 'kind'");
    s.kind = parse_learner_kind(get<std::string>(node, "kind", where, ""));
    s.name = get<std::string>(node, "name", where, "term" + std::to_string(index + 1));
    where = "term '" + s.name + "'";
    const YAML::Node cov = node["covariates"];
    if (!cov) throw InputError(where + ": missing 'covariates'");
    try {
        s.covariates = cov.IsSequence() ? cov.as<std::vector<std::string>>()
                                        : std::vector<std::string>{cov.as<std::string>()};
    } catch (const YAML::Exception&) {
        throw InputError(where + ": bad value for 'covariates'");
    }
    s.target_df = get(node, "df", where, s.target_df);
    s.intercept = get(node, "intercept", where, s.intercept);
    s.n_levels = get(node, "levels", where, s.n_levels);
    s.solver = parse_solver(get<std::string>(node, "solver", where, "qp"));
    s.hard_bounds = get(node, "hard_bounds", where, s.hard_bounds);
    if (const YAML::Node b = node["boundary"]) {
        check_keys(b, {"order", "n_edge", "sides", "lambda"}, where + " boundary");
        BoundarySpec bs;
        bs.order = get(b, "order", where, bs.order);
        bs.n_edge = get(b, "n_edge", where, bs.n_edge);
        bs.sides = parse_sides(get<std::string>(b, "sides", where, "both"));
        bs.lambda = get(b, "lambda", where, bs.lambda);
        s.boundary = bs;
    }

    const Constraint fallback = s.kind == LearnerKind::cyclic_pspline ? Constraint::cyclic : Constraint::none;
    bool inline_margin = false;
    for (const auto& k : kMarginKeys) inline_margin = inline_margin || node[k];
    switch (s.kind) {
    case LearnerKind::linear:
    case LearnerKind::categorical_ridge:
        if (inline_margin || node["margins"]) throw InputError(where + ": spline options do not apply to this kind");
        break;
    case LearnerKind::tensor: {
        const YAML::Node ms = node["margins"];
        if (inline_margin) throw InputError(where + ": tensor options go under 'margins'");
        if (!ms) {
            MarginSpec m;
            m.n_inner = 10;
            s.margins = {m, m};
            break;
        }
        if (!ms.IsSequence() || ms.size() != 2) throw InputError(where + ": 'margins' must list two entries");
        for (std::size_t k = 0; k < 2; ++k) {
            check_keys(ms[k], kMarginKeys, where + " margin " + std::to_string(k + 1));
            YAML::Node with_default = YAML::Clone(ms[k]);
            if (!with_default["knots"]) with_default["knots"] = 10;
            s.margins.push_back(parse_margin(with_default, where, Constraint::none));
        }
        break;
    }
    default:
        if (node["margins"]) throw InputError(where + ": 'margins' applies to tensor terms only");
        s.margins.push_back(parse_margin(node, where, fallback));
        break;
    }
    s.validate();
    return s;
}

void emit_margin(YAML::Emitter& e, const MarginSpec& m) {
    e << YAML::Key << "knots" << YAML::Value << m.n_inner;
    e << YAML::Key << "degree" << YAML::Value << m.degree;
    e << YAML::Key << "diff_order" << YAML::Value << m.diff_order;
    e << YAML::Key << "constraint" << YAML::Value << std::string(to_string(m.constraint));
    e << YAML::Key << "constraint_lambda" << YAML::Value << m.constraint_lambda;
    if (m.constraint == Constraint::bounded || m.lo != 0.0 || m.hi != 0.0)
        e << YAML::Key << "bounds" << YAML::Value << YAML::Flow << YAML::BeginSeq << m.lo << m.hi << YAML::EndSeq;
    if (m.range)
        e << YAML::Key << "range" << YAML::Value << YAML::Flow << YAML::BeginSeq << m.range->first
          << m.range->second << YAML::EndSeq;
}

} // namespace

ModelConfig parse_config(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw InputError(std::string("config: ") + e.what());
    }
    const std::string where = "config";
    check_keys(root, {"version", "response", "loss", "step", "mstop", "seed", "cv", "terms"}, where);
    ModelConfig c;
    c.version = get(root, "version", where, kConfigVersion);
    if (c.version != kConfigVersion)
        throw InputError("config: unsupported version " + std::to_string(c.version));
    c.response = get<std::string>(root, "response", where, c.response);
    c.loss = parse_loss(get<std::string>(root, "loss", where, "gaussian"));
    c.boost.step = get(root, "step", where, c.boost.step);
    c.boost.m_stop = get(root, "mstop", where, c.boost.m_stop);
    c.boost.seed = get(root, "seed", where, c.boost.seed);
    c.boost.validate();
    if (const YAML::Node cv = root["cv"]) {
        check_keys(cv, {"folds", "bootstrap", "m_max"}, "config cv");
        if (cv["folds"] && cv["bootstrap"]) throw InputError("config cv: give either 'folds' or 'bootstrap'");
        ResampleConfig r;
        if (cv["bootstrap"]) {
            r.kind = ResampleConfig::Kind::bootstrap;
            r.count = get(cv, "bootstrap", "config cv", 25);
        } else {
            r.count = get(cv, "folds", "config cv", 10);
        }
        r.m_max = get(cv, "m_max", "config cv", r.m_max);
        r.validate();
        c.cv = r;
    }
    const YAML::Node terms = root["terms"];
    if (!terms || !terms.IsSequence() || terms.size() == 0) throw InputError("config: 'terms' must list at least one term");
    for (std::size_t i = 0; i < terms.size(); ++i) {
        c.terms.push_back(parse_term(terms[i], i));
        for (std::size_t j = 0; j < i; ++j)
            if (c.terms[j].name == c.terms[i].name)
                throw InputError("config: duplicate term name '" + c.terms[i].name + "'");
    }
    return c;
}

ModelConfig read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string write_config(const ModelConfig& c) {
    YAML::Emitter e;
    e.SetDoublePrecision(17);
    e << YAML::BeginMap;
    e << YAML::Key << "version" << YAML::Value << c.version;
    e << YAML::Key << "response" << YAML::Value << c.response;
    e << YAML::Key << "loss" << YAML::Value << std::string(to_string(c.loss));
    e << YAML::Key << "step" << YAML::Value << c.boost.step;
    e << YAML::Key << "mstop" << YAML::Value << c.boost.m_stop;
    e << YAML::Key << "seed" << YAML::Value << c.boost.seed;
    if (c.cv) {
        e << YAML::Key << "cv" << YAML::Value << YAML::BeginMap;
        e << YAML::Key << (c.cv->kind == ResampleConfig::Kind::kfold ? "folds" : "bootstrap") << YAML::Value
          << c.cv->count;
        e << YAML::Key << "m_max" << YAML::Value << c.cv->m_max;
        e << YAML::EndMap;
    }
    e << YAML::Key << "terms" << YAML::Value << YAML::BeginSeq;
    for (const auto& s : c.terms) {
        e << YAML::BeginMap;
        e << YAML::Key << "name" << YAML::Value << s.name;
        e << YAML::Key << "kind" << YAML::Value << std::string(to_string(s.kind));
        e << YAML::Key << "covariates" << YAML::Value << YAML::Flow << s.covariates;
        e << YAML::Key << "df" << YAML::Value << s.target_df;
        if (s.kind == LearnerKind::linear) e << YAML::Key << "intercept" << YAML::Value << s.intercept;
        if (s.kind == LearnerKind::categorical_ridge) e << YAML::Key << "levels" << YAML::Value << s.n_levels;
        e << YAML::Key << "solver" << YAML::Value << std::string(to_string(s.solver));
        e << YAML::Key << "hard_bounds" << YAML::Value << s.hard_bounds;
        if (s.boundary) {
            e << YAML::Key << "boundary" << YAML::Value << YAML::BeginMap;
            e << YAML::Key << "order" << YAML::Value << s.boundary->order;
            e << YAML::Key << "n_edge" << YAML::Value << s.boundary->n_edge;
            e << YAML::Key << "sides" << YAML::Value << std::string(to_string(s.boundary->sides));
            e << YAML::Key << "lambda" << YAML::Value << s.boundary->lambda;
            e << YAML::EndMap;
        }
        if (s.kind == LearnerKind::tensor) {
            e << YAML::Key << "margins" << YAML::Value << YAML::BeginSeq;
            for (const auto& m : s.margins) {
                e << YAML::BeginMap;
                emit_margin(e, m);
                e << YAML::EndMap;
            }
            e << YAML::EndSeq;
        } else if (!s.margins.empty()) {
            emit_margin(e, s.margins[0]);
        }
        e << YAML::EndMap;
    }
    e << YAML::EndSeq << YAML::EndMap;
    return std::string(e.c_str()) + "\n";
}

} // namespace shapeboost

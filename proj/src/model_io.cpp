#include "rcbn/model_io.hpp"

#include <fstream>
#include <sstream>

namespace rcbn {

NameIndex::NameIndex(const std::vector<Variable>& schema) {
    for (std::size_t i = 0; i < schema.size(); ++i) {
        names_.push_back(schema[i].name);
        ids_.emplace(schema[i].name, static_cast<VarId>(i));
    }
}

VarId NameIndex::id(const std::string& name) const {
    const auto it = ids_.find(name);
    if (it == ids_.end()) {
        throw UsageError("unknown variable '" + name + "'");
    }
    return it->second;
}

const std::string& NameIndex::name(VarId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= names_.size()) {
        throw InternalError("variable id " + std::to_string(id) + " outside the schema");
    }
    return names_[static_cast<std::size_t>(id)];
}

VarSet NameIndex::ids(const std::vector<std::string>& names) const {
    VarSet out;
    for (const auto& n : names) {
        out.push_back(id(n));
    }
    return out;
}

std::vector<std::string> NameIndex::names(const VarSet& ids) const {
    std::vector<std::string> out;
    for (VarId v : ids) {
        out.push_back(name(v));
    }
    return out;
}

namespace {

template <typename F>
auto guarded(const char* what, F&& f) {
    try {
        return f();
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string(what) + ": " + e.what());
    }
}

nlohmann::json scored_to_json(const std::vector<ScoredParentSet>& sets, const NameIndex& names) {
    auto arr = nlohmann::json::array();
    for (const auto& s : sets) {
        arr.push_back({{"parents", names.names(s.parents)}, {"score", s.score}});
    }
    return arr;
}

std::vector<ScoredParentSet> scored_from_json(const nlohmann::json& arr, const NameIndex& names) {
    std::vector<ScoredParentSet> out;
    for (const auto& e : arr) {
        out.push_back({canonical(names.ids(e.at("parents").get<std::vector<std::string>>())),
                       e.at("score").get<double>()});
    }
    return out;
}

void check_format(const nlohmann::json& j, const char* format) {
    if (!j.is_object() || j.value("format", std::string{}) != format) {
        throw UsageError(std::string("expected a model file of format ") + format);
    }
}

void check_schema_hash(const nlohmann::json& j, const std::vector<Variable>& schema) {
    if (j.at("schema_hash").get<std::string>() != schema_hash(schema)) {
        throw UsageError("model schema hash does not match its embedded schema");
    }
}

}  // namespace

nlohmann::json dag_to_json(const Dag& g, const NameIndex& names) {
    nlohmann::json parents = nlohmann::json::object();
    for (VarId v : g.nodes) {
        parents[names.name(v)] = names.names(g.parents_of(v));
    }
    return {{"nodes", names.names(g.nodes)},
            {"parents", parents},
            {"labels", names.names(g.labels)},
            {"seed", g.seed}};
}

Dag dag_from_json(const nlohmann::json& j, const NameIndex& names) {
    return guarded("dag", [&] {
        Dag g;
        g.nodes = canonical(names.ids(j.at("nodes").get<std::vector<std::string>>()));
        for (VarId v : g.nodes) {
            const auto& ps = j.at("parents").at(names.name(v));
            g.parents[v] = canonical(names.ids(ps.get<std::vector<std::string>>()));
        }
        g.labels = names.ids(j.at("labels").get<std::vector<std::string>>());
        g.seed = j.value("seed", std::uint64_t{0});
        if (!is_acyclic(g)) {
            throw UsageError("model graph has a cycle");
        }
        return g;
    });
}

nlohmann::json candidates_to_json(const CandidateList& list, const NameIndex& names) {
    return {{"child", names.name(list.child)},
            {"entries", scored_to_json(list.entries, names)},
            {"explored", scored_to_json(list.explored, names)},
            {"frontier", scored_to_json(list.frontier, names)}};
}

CandidateList candidates_from_json(const nlohmann::json& j, const NameIndex& names) {
    return guarded("candidates", [&] {
        CandidateList out;
        out.child = names.id(j.at("child").get<std::string>());
        out.entries = scored_from_json(j.at("entries"), names);
        out.explored = scored_from_json(j.at("explored"), names);
        out.frontier = scored_from_json(j.at("frontier"), names);
        return out;
    });
}

std::string candidates_hash(const CandidateList& list, const NameIndex& names) {
    return hash_hex(candidates_to_json(list, names).dump());
}

nlohmann::json budget_to_json(const ExplorationBudget& b) {
    return {{"max_parent_set_size", b.max_parent_set_size},
            {"max_candidates_per_node", b.max_candidates_per_node},
            {"max_expansions_per_node", b.max_expansions_per_node}};
}

ExplorationBudget budget_from_json(const nlohmann::json& j) {
    return guarded("budget", [&] {
        ExplorationBudget b;
        b.max_parent_set_size = j.at("max_parent_set_size").get<int>();
        b.max_candidates_per_node = j.at("max_candidates_per_node").get<int>();
        b.max_expansions_per_node = j.at("max_expansions_per_node").get<int>();
        b.validate();
        return b;
    });
}

nlohmann::json ga_config_to_json(const GaConfig& c) {
    return {{"K", c.K},
            {"max_gen", c.max_gen},
            {"patience", c.patience},
            {"plateau", c.plateau},
            {"tau", c.tau},
            {"C", c.C},
            {"mutation_rate", c.mutation_rate},
            {"seed", c.seed},
            {"exhaustive", c.exhaustive}};
}

GaConfig ga_config_from_json(const nlohmann::json& j) {
    return guarded("GA config", [&] {
        GaConfig c;
        c.K = j.at("K").get<int>();
        c.max_gen = j.at("max_gen").get<int>();
        c.patience = j.at("patience").get<int>();
        c.plateau = j.at("plateau").get<double>();
        c.tau = j.at("tau").get<int>();
        c.C = j.at("C").get<double>();
        c.mutation_rate = j.at("mutation_rate").get<double>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.exhaustive = j.at("exhaustive").get<bool>();
        c.validate();
        return c;
    });
}

nlohmann::json cpts_to_json(const std::vector<Cpt>& cpts, const NameIndex& names) {
    auto arr = nlohmann::json::array();
    for (const auto& c : cpts) {
        arr.push_back({{"node", names.name(c.node)},
                       {"parents", names.names(c.parents)},
                       {"card", c.card},
                       {"alpha", c.alpha},
                       {"table", c.table}});
    }
    return arr;
}

std::vector<Cpt> cpts_from_json(const nlohmann::json& j, const NameIndex& names,
                                const std::vector<Variable>& schema) {
    return guarded("cpts", [&] {
        std::vector<Cpt> out;
        for (const auto& cj : j) {
            Cpt c;
            c.node = names.id(cj.at("node").get<std::string>());
            c.parents = names.ids(cj.at("parents").get<std::vector<std::string>>());
            c.card = cj.at("card").get<std::uint32_t>();
            c.alpha = cj.at("alpha").get<double>();
            c.table = cj.at("table").get<std::vector<double>>();
            std::size_t q = 1;
            for (VarId p : c.parents) {
                c.parent_cards.push_back(
                    static_cast<std::uint32_t>(schema[static_cast<std::size_t>(p)].cardinality));
                q *= c.parent_cards.back();
            }
            if (c.card != static_cast<std::uint32_t>(schema[static_cast<std::size_t>(c.node)].cardinality) ||
                c.table.size() != q * c.card) {
                throw UsageError("cpt for '" + names.name(c.node) + "' does not fit the schema");
            }
            out.push_back(std::move(c));
        }
        return out;
    });
}

nlohmann::json metrics_to_json(const MetricsReport& m) {
    return {{"tp", m.tp},
            {"fp", m.fp},
            {"tn", m.tn},
            {"fn", m.fn},
            {"precision", m.precision},
            {"sensitivity", m.sensitivity},
            {"specificity", m.specificity},
            {"f1", m.f1}};
}

nlohmann::json global_model_to_json(const GlobalModel& m) {
    const NameIndex names(m.schema);
    nlohmann::json cands = nlohmann::json::object();
    nlohmann::json hashes = nlohmann::json::object();
    for (const auto& [v, list] : m.candidates) {
        cands[names.name(v)] = candidates_to_json(list, names);
        hashes[names.name(v)] = candidates_hash(list, names);
    }
    return {{"format", kGlobalModelFormat},
            {"schema", schema_to_json(m.schema)},
            {"schema_hash", schema_hash(m.schema)},
            {"dag", dag_to_json(m.dag, names)},
            {"candidates", cands},
            {"candidate_hashes", hashes},
            {"budget", budget_to_json(m.budget)},
            {"bins", m.bins},
            {"seed", m.seed},
            {"provenance", {{"data_hash", m.data_hash}}}};
}

GlobalModel global_model_from_json(const nlohmann::json& j) {
    check_format(j, kGlobalModelFormat);
    return guarded("global model", [&] {
        GlobalModel m;
        m.schema = schema_from_json(j.at("schema"));
        check_schema_hash(j, m.schema);
        const NameIndex names(m.schema);
        m.dag = dag_from_json(j.at("dag"), names);
        for (const auto& [name, cj] : j.at("candidates").items()) {
            auto list = candidates_from_json(cj, names);
            if (list.child != names.id(name)) {
                throw UsageError("candidate list for '" + name + "' names another child");
            }
            m.candidates.emplace(list.child, std::move(list));
        }
        m.budget = budget_from_json(j.at("budget"));
        m.bins = j.at("bins").get<int>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.data_hash = j.at("provenance").value("data_hash", std::string{});
        return m;
    });
}

nlohmann::json reduced_model_to_json(const ReducedModelFile& m) {
    const NameIndex names(m.schema);
    auto history = nlohmann::json::array();
    for (const auto& h : m.model.history) {
        history.push_back({{"generation", h.generation},
                           {"best", h.best},
                           {"runner_up", h.runner_up},
                           {"stagnation", h.stagnation},
                           {"evaluated", h.evaluated}});
    }
    return {{"format", kReducedModelFormat},
            {"schema", schema_to_json(m.schema)},
            {"schema_hash", schema_hash(m.schema)},
            {"label", names.name(m.model.label)},
            {"dag", dag_to_json(m.model.dag, names)},
            {"selected", names.names(m.model.selected)},
            {"fitness", m.model.fitness},
            {"terms", {{"u", m.model.terms.u}, {"l", m.model.terms.l}, {"r", m.model.terms.r}}},
            {"config", ga_config_to_json(m.model.config)},
            {"history", history},
            {"alpha", m.alpha},
            {"cpts", cpts_to_json(m.cpts, names)},
            {"provenance", {{"global_model_hash", m.global_model_hash}, {"data_hash", m.data_hash}}}};
}

ReducedModelFile reduced_model_from_json(const nlohmann::json& j) {
    check_format(j, kReducedModelFormat);
    return guarded("reduced model", [&] {
        ReducedModelFile m;
        m.schema = schema_from_json(j.at("schema"));
        check_schema_hash(j, m.schema);
        const NameIndex names(m.schema);
        m.model.label = names.id(j.at("label").get<std::string>());
        m.model.dag = dag_from_json(j.at("dag"), names);
        m.model.selected = canonical(names.ids(j.at("selected").get<std::vector<std::string>>()));
        m.model.fitness = j.at("fitness").get<double>();
        m.model.terms.u = j.at("terms").at("u").get<double>();
        m.model.terms.l = j.at("terms").at("l").get<double>();
        m.model.terms.r = j.at("terms").at("r").get<double>();
        m.model.config = ga_config_from_json(j.at("config"));
        for (const auto& h : j.at("history")) {
            GenerationRecord r;
            r.generation = h.at("generation").get<int>();
            r.best = h.at("best").get<double>();
            r.runner_up = h.at("runner_up").get<double>();
            r.stagnation = h.at("stagnation").get<int>();
            r.evaluated = h.at("evaluated").get<std::size_t>();
            m.model.history.push_back(r);
        }
        m.alpha = j.at("alpha").get<double>();
        m.cpts = cpts_from_json(j.at("cpts"), names, m.schema);
        m.global_model_hash = j.at("provenance").value("global_model_hash", std::string{});
        m.data_hash = j.at("provenance").value("data_hash", std::string{});
        return m;
    });
}

namespace {

std::string dot_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') {
            out += '\\';
        }
        out += c;
    }
    return out + "\"";
}

}  // namespace

std::string to_dot(const Dag& g, const NameIndex& names, const std::string& graph_name) {
    std::ostringstream os;
    os << "digraph " << dot_quote(graph_name) << " {\n";
    for (VarId v : g.nodes) {
        os << "  " << dot_quote(names.name(v));
        if (std::find(g.labels.begin(), g.labels.end(), v) != g.labels.end()) {
            os << " [shape=box, style=filled, fillcolor=\"#f4cccc\"]";
        }
        os << ";\n";
    }
    for (VarId v : g.nodes) {
        for (VarId p : g.parents_of(v)) {
            os << "  " << dot_quote(names.name(p)) << " -> " << dot_quote(names.name(v)) << ";\n";
        }
    }
    os << "}\n";
    return os.str();
}

nlohmann::json read_json_file(const std::string& path) {
    const std::string text = read_text_file(path);
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw UsageError("invalid JSON in " + path + ": " + e.what());
    }
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw UsageError("cannot read " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw UsageError("cannot write " + path);
    }
    out << text;
    if (!out) {
        throw UsageError("write failed for " + path);
    }
}

}  // namespace rcbn

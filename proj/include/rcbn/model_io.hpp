#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "rcbn/dataset.hpp"
#include "rcbn/inference.hpp"
#include "rcbn/rootcause.hpp"
#include "rcbn/structure.hpp"

namespace rcbn {

inline constexpr const char* kGlobalModelFormat = "rcbn-global-model/1";
inline constexpr const char* kReducedModelFormat = "rcbn-reduced-model/1";

/// Resolves names to ids against a schema; unknown names throw UsageError.
class NameIndex {
public:
    explicit NameIndex(const std::vector<Variable>& schema);
    VarId id(const std::string& name) const;
    const std::string& name(VarId id) const;
    VarSet ids(const std::vector<std::string>& names) const;
    std::vector<std::string> names(const VarSet& ids) const;

private:
    std::vector<std::string> names_;
    std::map<std::string, VarId> ids_;
};

nlohmann::json dag_to_json(const Dag& g, const NameIndex& names);
Dag dag_from_json(const nlohmann::json& j, const NameIndex& names);

nlohmann::json candidates_to_json(const CandidateList& list, const NameIndex& names);
CandidateList candidates_from_json(const nlohmann::json& j, const NameIndex& names);
/// Hash of one node's serialized candidate list.
std::string candidates_hash(const CandidateList& list, const NameIndex& names);

nlohmann::json budget_to_json(const ExplorationBudget& b);
ExplorationBudget budget_from_json(const nlohmann::json& j);
nlohmann::json ga_config_to_json(const GaConfig& c);
GaConfig ga_config_from_json(const nlohmann::json& j);

nlohmann::json cpts_to_json(const std::vector<Cpt>& cpts, const NameIndex& names);
std::vector<Cpt> cpts_from_json(const nlohmann::json& j, const NameIndex& names,
                                const std::vector<Variable>& schema);

nlohmann::json metrics_to_json(const MetricsReport& m);

/// Learned network over every variable of the training schema.
struct GlobalModel {
    std::vector<Variable> schema;
    Dag dag;
    std::map<VarId, CandidateList> candidates;
    ExplorationBudget budget;
    int bins = 4;
    std::uint64_t seed = 0;
    std::string data_hash;
};

nlohmann::json global_model_to_json(const GlobalModel& m);
GlobalModel global_model_from_json(const nlohmann::json& j);

/// Label-specific subgraph with its CPTs.
struct ReducedModelFile {
    std::vector<Variable> schema;
    ReducedModel model;
    std::vector<Cpt> cpts;
    double alpha = 1.0;
    std::string global_model_hash;
    std::string data_hash;
};

nlohmann::json reduced_model_to_json(const ReducedModelFile& m);
ReducedModelFile reduced_model_from_json(const nlohmann::json& j);

/// Deterministic Graphviz digraph; label nodes are drawn as filled boxes.
std::string to_dot(const Dag& g, const NameIndex& names, const std::string& graph_name = "rcbn");

/// Parses a JSON file, mapping I/O and syntax failures to UsageError.
nlohmann::json read_json_file(const std::string& path);
/// Writes text to a file, mapping I/O failures to UsageError.
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace rcbn

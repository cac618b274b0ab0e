#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rcbn/dataset.hpp"

namespace rcbn {

struct PathologyDependency {
    std::string pathology;
    double prob_given_present = 0.0;
    double prob_given_absent = 0.0;
};

struct Pathology {
    std::string name;
    std::size_t patients_per_pathology = 0;
    std::map<std::string, double> symptom_probs;
    std::optional<PathologyDependency> depends_on;
};

/// Synthetic diagnosis data. Each pathology contributes patients_per_pathology
/// rows in which it is active. A pathology with depends_on also becomes active
/// in other rows with a probability conditioned on its prerequisite being
/// active. A symptom fires with 1 - prod(1 - p) over the active pathologies
/// listing it, or with baseline_noise when none lists it.
struct GeneratorSpec {
    std::vector<std::string> symptoms;
    std::vector<Pathology> pathologies;
    double baseline_noise = 0.0;
    std::uint64_t seed = 0;
    /// Pathologies exported as label columns; empty exports all.
    std::vector<std::string> labels;

    void validate() const;
    std::vector<std::string> label_names() const;
};

struct GeneratedDataset {
    RawTable table;
    std::string provenance;

    /// Symptoms and labels as boolean-coded variables, labels marked.
    Dataset dataset() const;
};

GeneratedDataset generate(const GeneratorSpec& spec);

/// 41 pathologies, 132 symptoms, 500 patients each; Gilbert's syndrome depends on jaundice.
GeneratorSpec builtin_medical_spec();

/// Symptoms the builtin spec assigns to jaundice.
std::vector<std::string> builtin_jaundice_symptoms();

nlohmann::json spec_to_json(const GeneratorSpec& spec);
GeneratorSpec spec_from_json(const nlohmann::json& j);
std::string spec_hash(const GeneratorSpec& spec);

}  // namespace rcbn

#include "rcbn/synthgen.hpp"

#include <algorithm>
#include <functional>
#include <set>

namespace rcbn {

void GeneratorSpec::validate() const {
    if (symptoms.empty()) {
        throw UsageError("generator spec: no symptoms");
    }
    if (pathologies.empty()) {
        throw UsageError("generator spec: no pathologies");
    }
    if (!(baseline_noise >= 0.0 && baseline_noise <= 1.0)) {
        throw UsageError("generator spec: baseline_noise must lie in [0, 1]");
    }
    std::set<std::string> symptom_set(symptoms.begin(), symptoms.end());
    if (symptom_set.size() != symptoms.size()) {
        throw UsageError("generator spec: duplicate symptom name");
    }
    std::map<std::string, const Pathology*> by_name;
    for (const auto& p : pathologies) {
        if (!by_name.emplace(p.name, &p).second) {
            throw UsageError("generator spec: duplicate pathology '" + p.name + "'");
        }
        if (symptom_set.count(p.name)) {
            throw UsageError("generator spec: pathology '" + p.name + "' shares a symptom name");
        }
    }
    auto check_prob = [](double v, const std::string& what) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw UsageError("generator spec: probability for " + what + " outside [0, 1]");
        }
    };
    for (const auto& p : pathologies) {
        for (const auto& [s, prob] : p.symptom_probs) {
            if (!symptom_set.count(s)) {
                throw UsageError("generator spec: pathology '" + p.name + "' lists unknown symptom '" + s + "'");
            }
            check_prob(prob, p.name + "/" + s);
        }
        if (p.depends_on) {
            if (!by_name.count(p.depends_on->pathology)) {
                throw UsageError("generator spec: '" + p.name + "' depends on unknown pathology '" +
                                 p.depends_on->pathology + "'");
            }
            check_prob(p.depends_on->prob_given_present, p.name + " depends_on");
            check_prob(p.depends_on->prob_given_absent, p.name + " depends_on");
        }
    }
    // depends_on chains must end
    for (const auto& p : pathologies) {
        std::set<std::string> seen{p.name};
        const Pathology* cur = &p;
        while (cur->depends_on) {
            const auto& next = cur->depends_on->pathology;
            if (!seen.insert(next).second) {
                throw UsageError("generator spec: depends_on cycle through '" + next + "'");
            }
            cur = by_name.at(next);
        }
    }
    for (const auto& l : labels) {
        if (!by_name.count(l)) {
            throw UsageError("generator spec: label '" + l + "' is not a pathology");
        }
    }
}

std::vector<std::string> GeneratorSpec::label_names() const {
    if (!labels.empty()) {
        return labels;
    }
    std::vector<std::string> out;
    for (const auto& p : pathologies) {
        out.push_back(p.name);
    }
    return out;
}

Dataset GeneratedDataset::dataset() const {
    std::vector<std::string> bools;
    std::vector<std::string> labels;
    for (const auto& c : table.columns) {
        bools.push_back(c.name);
        if (c.is_label) {
            labels.push_back(c.name);
        }
    }
    LoadOptions opts;
    opts.label_names = labels;
    opts.boolean_columns = bools;
    return discretize(table_from_csv_text(format_csv(table), opts), 2);
}

namespace {

// Pathologies ordered so each comes after the one it depends on.
std::vector<std::size_t> dependency_order(const GeneratorSpec& spec) {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < spec.pathologies.size(); ++i) {
        index[spec.pathologies[i].name] = i;
    }
    std::vector<std::size_t> order;
    std::vector<bool> placed(spec.pathologies.size(), false);
    std::function<void(std::size_t)> place = [&](std::size_t i) {
        if (placed[i]) {
            return;
        }
        if (const auto& d = spec.pathologies[i].depends_on) {
            place(index.at(d->pathology));
        }
        placed[i] = true;
        order.push_back(i);
    };
    for (std::size_t i = 0; i < spec.pathologies.size(); ++i) {
        place(i);
    }
    return order;
}

}  // namespace

GeneratedDataset generate(const GeneratorSpec& spec) {
    spec.validate();
    const auto label_names = spec.label_names();
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < spec.pathologies.size(); ++i) {
        index[spec.pathologies[i].name] = i;
    }
    std::map<std::string, std::size_t> symptom_index;
    for (std::size_t s = 0; s < spec.symptoms.size(); ++s) {
        symptom_index[spec.symptoms[s]] = s;
    }
    // per symptom, the (pathology, probability) pairs that list it
    std::vector<std::vector<std::pair<std::size_t, double>>> listed(spec.symptoms.size());
    for (std::size_t p = 0; p < spec.pathologies.size(); ++p) {
        for (const auto& [s, prob] : spec.pathologies[p].symptom_probs) {
            listed[symptom_index.at(s)].emplace_back(p, prob);
        }
    }
    const auto order = dependency_order(spec);

    std::size_t n_rows = 0;
    for (const auto& p : spec.pathologies) {
        n_rows += p.patients_per_pathology;
    }
    GeneratedDataset out;
    out.table.n_rows = n_rows;
    for (const auto& s : spec.symptoms) {
        RawColumn c;
        c.name = s;
        c.type = ColumnType::Numeric;
        c.cells.reserve(n_rows);
        out.table.columns.push_back(std::move(c));
    }
    for (const auto& l : label_names) {
        RawColumn c;
        c.name = l;
        c.type = ColumnType::Numeric;
        c.is_label = true;
        c.cells.reserve(n_rows);
        out.table.columns.push_back(std::move(c));
    }

    Rng rng(spec.seed);
    std::vector<std::uint8_t> active(spec.pathologies.size());
    for (std::size_t g = 0; g < spec.pathologies.size(); ++g) {
        for (std::size_t patient = 0; patient < spec.pathologies[g].patients_per_pathology; ++patient) {
            std::fill(active.begin(), active.end(), 0);
            active[g] = 1;
            for (std::size_t p : order) {
                const auto& dep = spec.pathologies[p].depends_on;
                if (p == g || !dep) {
                    continue;
                }
                const bool prerequisite = active[index.at(dep->pathology)] != 0;
                active[p] = rng.bernoulli(prerequisite ? dep->prob_given_present : dep->prob_given_absent);
            }
            for (std::size_t s = 0; s < spec.symptoms.size(); ++s) {
                double absent = 1.0;
                bool any = false;
                for (const auto& [p, prob] : listed[s]) {
                    if (active[p]) {
                        absent *= 1.0 - prob;
                        any = true;
                    }
                }
                const double fire = any ? 1.0 - absent : spec.baseline_noise;
                out.table.columns[s].cells.push_back(rng.bernoulli(fire) ? "1" : "0");
            }
            for (std::size_t l = 0; l < label_names.size(); ++l) {
                out.table.columns[spec.symptoms.size() + l].cells.push_back(
                    active[index.at(label_names[l])] ? "1" : "0");
            }
        }
    }
    out.provenance = spec_hash(spec);
    return out;
}

nlohmann::json spec_to_json(const GeneratorSpec& spec) {
    nlohmann::json j;
    j["symptoms"] = spec.symptoms;
    auto arr = nlohmann::json::array();
    for (const auto& p : spec.pathologies) {
        nlohmann::json pj;
        pj["name"] = p.name;
        pj["patients_per_pathology"] = p.patients_per_pathology;
        pj["symptom_probs"] = p.symptom_probs;
        if (p.depends_on) {
            pj["depends_on"] = {{"pathology", p.depends_on->pathology},
                                {"prob_given_present", p.depends_on->prob_given_present},
                                {"prob_given_absent", p.depends_on->prob_given_absent}};
        } else {
            pj["depends_on"] = nullptr;
        }
        arr.push_back(std::move(pj));
    }
    j["pathologies"] = std::move(arr);
    j["baseline_noise"] = spec.baseline_noise;
    j["seed"] = spec.seed;
    j["labels"] = spec.labels;
    return j;
}

GeneratorSpec spec_from_json(const nlohmann::json& j) {
    GeneratorSpec spec;
    try {
        spec.symptoms = j.at("symptoms").get<std::vector<std::string>>();
        for (const auto& pj : j.at("pathologies")) {
            Pathology p;
            p.name = pj.at("name").get<std::string>();
            p.patients_per_pathology = pj.at("patients_per_pathology").get<std::size_t>();
            p.symptom_probs = pj.value("symptom_probs", std::map<std::string, double>{});
            if (pj.contains("depends_on") && !pj["depends_on"].is_null()) {
                const auto& d = pj["depends_on"];
                p.depends_on = PathologyDependency{d.at("pathology").get<std::string>(),
                                                   d.at("prob_given_present").get<double>(),
                                                   d.at("prob_given_absent").get<double>()};
            }
            spec.pathologies.push_back(std::move(p));
        }
        spec.baseline_noise = j.value("baseline_noise", 0.0);
        spec.seed = j.value("seed", std::uint64_t{0});
        spec.labels = j.value("labels", std::vector<std::string>{});
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("generator spec: ") + e.what());
    }
    spec.validate();
    return spec;
}

std::string spec_hash(const GeneratorSpec& spec) { return hash_hex(spec_to_json(spec).dump()); }

}  // namespace rcbn

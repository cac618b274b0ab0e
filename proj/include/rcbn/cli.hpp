#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rcbn/rootcause.hpp"
#include "rcbn/structure.hpp"

namespace rcbn::cli {

/// What a command read and wrote, for its run manifest.
struct CommandRecord {
    nlohmann::json config = nlohmann::json::object();
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    /// Seed drawn because none was given; recorded so a replay reuses it.
    std::optional<std::uint64_t> drawn_seed;
    /// Where the manifest goes; empty skips it.
    std::string manifest_path;
};

struct GenerateOptions {
    std::string spec_path;  // empty: builtin spec
    std::string out;
    std::optional<std::uint64_t> seed;
    std::string dump_spec;
};

struct SplitOptions {
    std::string data;
    std::vector<std::string> strata;
    double test_fraction = 0.2;
    std::optional<std::uint64_t> seed;
    std::string train_out;
    std::string test_out;
};

struct LearnOptions {
    std::string data;
    std::vector<std::string> labels;
    std::vector<std::string> ignore;
    int bins = 4;
    ExplorationBudget budget;
    std::optional<std::uint64_t> seed;
    int jobs = 1;
    std::string out;
};

struct AddLabelOptions {
    std::string model;
    std::string data;
    std::string label;
    int jobs = 1;
    std::string out;
};

struct ReduceOptions {
    std::string model;
    std::string data;
    std::string label;
    GaConfig ga;
    std::optional<std::uint64_t> seed;
    double alpha = 1.0;
    std::string out;
};

struct EvalOptions {
    std::string model;
    std::string test;
    double threshold = 0.5;
    std::vector<std::string> hide;
    std::string train;  // enables the decision-tree baseline
    int tree_depth = 5;
    int jobs = 1;
    std::string out;
};

struct ExportDotOptions {
    std::string model;
    std::string out;
};

CommandRecord cmd_generate(const GenerateOptions& o, std::ostream& log);
CommandRecord cmd_split(const SplitOptions& o, std::ostream& log);
CommandRecord cmd_learn(const LearnOptions& o, std::ostream& log);
CommandRecord cmd_add_label(const AddLabelOptions& o, std::ostream& log);
CommandRecord cmd_reduce(const ReduceOptions& o, std::ostream& log);
CommandRecord cmd_eval(const EvalOptions& o, std::ostream& log);
CommandRecord cmd_export_dot(const ExportDotOptions& o, std::ostream& log);

/// Re-runs the command recorded in a manifest and compares output hashes.
/// Returns true when every output is byte-identical to the recorded run.
bool replay(const std::string& manifest_path, std::ostream& log);

/// Parses argv, runs the command and writes its manifest.
/// Returns 0 on success, 2 on usage or validation errors, 1 on internal errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rcbn::cli

#include "rcbn/cli.hpp"

#include <chrono>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <random>

#include <CLI11.hpp>

#include "rcbn/dataset.hpp"
#include "rcbn/decision_tree.hpp"
#include "rcbn/inference.hpp"
#include "rcbn/model_io.hpp"
#include "rcbn/synthgen.hpp"

namespace rcbn::cli {

namespace {

std::uint64_t draw_seed() {
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& given, CommandRecord& rec,
                           std::ostream& log) {
    if (given) {
        return *given;
    }
    const std::uint64_t s = draw_seed();
    rec.drawn_seed = s;
    log << "no --seed given; drew seed " << s << "\n";
    return s;
}

std::string file_hash(const std::string& path) { return hash_hex(read_text_file(path)); }

std::string dump(const nlohmann::json& j) { return j.dump(1) + "\n"; }

std::string manifest_for(const std::string& out) { return out + ".manifest.json"; }

std::vector<std::string> schema_labels(const std::vector<Variable>& schema) {
    std::vector<std::string> out;
    for (const auto& v : schema) {
        if (v.kind == VariableKind::Label) {
            out.push_back(v.name);
        }
    }
    return out;
}

// Loads a CSV and encodes it against an existing schema.
Dataset load_with_schema(const std::string& path, const std::vector<Variable>& schema) {
    LoadOptions opts;
    opts.label_names = schema_labels(schema);
    return encode_with_schema(load_csv(path, opts), schema);
}

void print_metrics_row(std::ostream& os, const std::string& name, const MetricsReport& m) {
    os << std::left << std::setw(16) << name << std::right << std::fixed << std::setprecision(4)
       << std::setw(11) << m.precision << std::setw(13) << m.sensitivity << std::setw(13)
       << m.specificity << std::setw(9) << m.f1 << "   tp=" << m.tp << " fp=" << m.fp
       << " tn=" << m.tn << " fn=" << m.fn << "\n";
    os.unsetf(std::ios::floatfield);
}

}  // namespace

CommandRecord cmd_generate(const GenerateOptions& o, std::ostream& log) {
    CommandRecord rec;
    GeneratorSpec spec;
    bool spec_has_seed = true;
    if (o.spec_path.empty()) {
        spec = builtin_medical_spec();
    } else {
        const auto j = read_json_file(o.spec_path);
        spec = spec_from_json(j);
        spec_has_seed = j.contains("seed");
        rec.inputs.push_back(o.spec_path);
    }
    if (o.seed) {
        spec.seed = *o.seed;
    } else if (!spec_has_seed) {
        spec.seed = resolve_seed(std::nullopt, rec, log);
    }
    if (!o.dump_spec.empty()) {
        write_text_file(o.dump_spec, dump(spec_to_json(spec)));
        rec.outputs.push_back(o.dump_spec);
    }
    const auto data = generate(spec);
    write_csv(o.out, data.table);
    rec.outputs.push_back(o.out);
    rec.config = {{"spec", o.spec_path.empty() ? "builtin" : o.spec_path},
                  {"spec_hash", data.provenance},
                  {"seed", spec.seed}};
    rec.manifest_path = manifest_for(o.out);
    log << "wrote " << data.table.n_rows << " rows x " << data.table.columns.size() << " columns to "
        << o.out << "\n";
    return rec;
}

CommandRecord cmd_split(const SplitOptions& o, std::ostream& log) {
    CommandRecord rec;
    if (!(o.test_fraction > 0.0 && o.test_fraction < 1.0)) {
        throw UsageError("--test-fraction must lie in (0, 1)");
    }
    const std::uint64_t seed = resolve_seed(o.seed, rec, log);
    const auto table = load_csv(o.data, LoadOptions{});
    const auto [train, test] = stratified_split(table, o.strata, o.test_fraction, seed);
    write_csv(o.train_out, train);
    write_csv(o.test_out, test);
    rec.inputs = {o.data};
    rec.outputs = {o.train_out, o.test_out};
    rec.config = {{"strata", o.strata}, {"test_fraction", o.test_fraction}, {"seed", seed}};
    rec.manifest_path = manifest_for(o.train_out);
    log << "split " << table.n_rows << " rows: " << train.n_rows << " train, " << test.n_rows
        << " test\n";
    return rec;
}

CommandRecord cmd_learn(const LearnOptions& o, std::ostream& log) {
    CommandRecord rec;
    if (o.labels.empty()) {
        throw UsageError("learn needs at least one --labels entry");
    }
    o.budget.validate();
    const std::uint64_t seed = resolve_seed(o.seed, rec, log);
    LoadOptions opts;
    opts.label_names = o.labels;
    opts.ignore_columns = o.ignore;
    const Dataset ds = discretize(load_csv(o.data, opts), o.bins);

    std::vector<VarId> all;
    for (std::size_t v = 0; v < ds.n_vars(); ++v) {
        all.push_back(static_cast<VarId>(v));
    }
    ScoreCache cache;
    GlobalModel model;
    model.candidates = explore_all(ds, all, o.budget, cache, o.jobs);
    std::vector<VarId> labels;
    for (const auto& l : o.labels) {
        labels.push_back(ds.id_of(l));
    }
    model.dag = select_parents(model.candidates, labels, seed);
    model.schema = ds.variables();
    model.budget = o.budget;
    model.bins = o.bins;
    model.seed = seed;
    model.data_hash = file_hash(o.data);
    write_text_file(o.out, dump(global_model_to_json(model)));

    rec.inputs = {o.data};
    rec.outputs = {o.out};
    rec.config = {{"labels", o.labels},
                  {"ignore", o.ignore},
                  {"bins", o.bins},
                  {"budget", budget_to_json(o.budget)},
                  {"seed", seed}};
    rec.manifest_path = manifest_for(o.out);
    log << "learned network: " << model.dag.nodes.size() << " nodes, " << model.dag.edge_count()
        << " edges, " << cache.size() << " scored parent sets\n";
    const NameIndex names(model.schema);
    for (VarId l : labels) {
        log << "  parents of " << names.name(l) << ":";
        for (VarId p : model.dag.parents_of(l)) {
            log << " " << names.name(p);
        }
        log << "\n";
    }
    return rec;
}

CommandRecord cmd_add_label(const AddLabelOptions& o, std::ostream& log) {
    CommandRecord rec;
    const std::string model_text = read_text_file(o.model);
    GlobalModel model = global_model_from_json(nlohmann::json::parse(model_text));
    for (const auto& v : model.schema) {
        if (v.name == o.label) {
            throw UsageError("label '" + o.label + "' is already in the model");
        }
    }
    const NameIndex old_names(model.schema);
    std::vector<std::string> old_labels;
    for (VarId l : model.dag.labels) {
        old_labels.push_back(old_names.name(l));
    }

    LoadOptions opts;
    opts.label_names = schema_labels(model.schema);
    opts.label_names.push_back(o.label);
    const RawTable table = load_csv(o.data, opts);
    const Dataset old_part = encode_with_schema(table, model.schema);
    RawTable single;
    single.n_rows = table.n_rows;
    single.columns.push_back(table.column(o.label));
    const Dataset new_part = discretize(single, model.bins);
    if (new_part.n_rows() != old_part.n_rows()) {
        throw UsageError("rows of '" + o.label + "' do not line up with the model's training rows");
    }
    const std::string data_hash = file_hash(o.data);
    if (data_hash != model.data_hash) {
        log << "warning: data differs from the file the model was learned on\n";
    }

    auto variables = old_part.variables();
    auto columns = old_part.columns();
    variables.push_back(new_part.variable(0));
    columns.push_back(new_part.columns()[0]);
    const Dataset ds(std::move(variables), std::move(columns));
    const VarId new_id = ds.id_of(o.label);

    ScoreCache cache;
    model.candidates.emplace(new_id, explore_candidates(ds, new_id, model.budget, cache));
    std::vector<VarId> labels = model.dag.labels;
    labels.push_back(new_id);
    model.dag = select_parents(model.candidates, labels, model.seed);
    model.schema = ds.variables();
    write_text_file(o.out, dump(global_model_to_json(model)));

    rec.inputs = {o.model, o.data};
    rec.outputs = {o.out};
    rec.config = {{"label", o.label}, {"previous_labels", old_labels}, {"seed", model.seed}};
    rec.manifest_path = manifest_for(o.out);
    const NameIndex names(model.schema);
    log << "added label " << o.label << "; explored 1 node, reused " << model.candidates.size() - 1
        << " candidate lists\n  parents of " << o.label << ":";
    for (VarId p : model.dag.parents_of(new_id)) {
        log << " " << names.name(p);
    }
    log << "\n";
    return rec;
}

CommandRecord cmd_reduce(const ReduceOptions& o, std::ostream& log) {
    CommandRecord rec;
    const std::string model_text = read_text_file(o.model);
    const GlobalModel global = global_model_from_json(nlohmann::json::parse(model_text));
    const NameIndex names(global.schema);
    const VarId label = names.id(o.label);
    const Dataset ds = load_with_schema(o.data, global.schema);

    GaConfig cfg = o.ga;
    cfg.seed = resolve_seed(o.seed, rec, log);
    ReducedModelFile out;
    out.schema = global.schema;
    out.model = extract_root_cause(ds, global.dag, label, cfg);
    out.alpha = o.alpha;
    out.cpts = fit_cpts(ds, out.model.dag, o.alpha);
    out.global_model_hash = hash_hex(model_text);
    out.data_hash = file_hash(o.data);
    write_text_file(o.out, dump(reduced_model_to_json(out)));

    rec.inputs = {o.model, o.data};
    rec.outputs = {o.out};
    rec.config = {{"label", o.label}, {"ga", ga_config_to_json(out.model.config)}, {"alpha", o.alpha},
                  {"seed", cfg.seed}};
    rec.manifest_path = manifest_for(o.out);
    log << "reduced model for " << o.label << ": " << out.model.dag.nodes.size() << " nodes, "
        << out.model.dag.edge_count() << " edges, fitness " << out.model.fitness << " after "
        << out.model.history.size() << " generations\n  features:";
    for (VarId v : out.model.selected) {
        log << " " << names.name(v);
    }
    log << "\n";
    return rec;
}

CommandRecord cmd_eval(const EvalOptions& o, std::ostream& log) {
    CommandRecord rec;
    const auto model = reduced_model_from_json(read_json_file(o.model));
    const NameIndex names(model.schema);
    const Dataset test = load_with_schema(o.test, model.schema);
    const VarSet hidden = canonical(names.ids(o.hide));
    if (contains(hidden, model.model.label)) {
        throw UsageError("cannot hide the label being evaluated");
    }
    const auto bn = evaluate(model.cpts, model.model.dag, model.model.label, test, o.threshold, hidden,
                             o.jobs);
    nlohmann::json report = {{"label", names.name(model.model.label)},
                             {"threshold", o.threshold},
                             {"hidden", o.hide},
                             {"rows", test.n_rows()},
                             {"bayes_net", metrics_to_json(bn)}};
    log << "label " << names.name(model.model.label) << ", threshold " << o.threshold;
    if (!o.hide.empty()) {
        log << ", hidden:";
        for (const auto& h : o.hide) {
            log << " " << h;
        }
    }
    log << ", " << test.n_rows() << " rows\n"
        << std::left << std::setw(16) << "model" << std::right << std::setw(11) << "precision"
        << std::setw(13) << "sensitivity" << std::setw(13) << "specificity" << std::setw(9) << "f1"
        << "\n";
    print_metrics_row(log, "bayes-net", bn);
    rec.inputs = {o.model, o.test};

    if (!o.train.empty()) {
        VarSet features;
        for (VarId v : model.model.selected) {
            if (!contains(hidden, v)) {
                features.push_back(v);
            }
        }
        if (features.empty()) {
            log << "decision tree skipped: no observable features\n";
        } else {
            const Dataset train = load_with_schema(o.train, model.schema);
            const auto tree = fit_constrained_tree(train, features, model.model.label, o.tree_depth);
            const auto tm = evaluate_tree(tree, test);
            report["tree"] = metrics_to_json(tm);
            report["tree"]["max_depth"] = o.tree_depth;
            report["tree"]["features"] = names.names(features);
            print_metrics_row(log, "tree(depth " + std::to_string(o.tree_depth) + ")", tm);
            rec.inputs.push_back(o.train);
        }
    }
    if (!o.out.empty()) {
        write_text_file(o.out, dump(report));
        rec.outputs = {o.out};
        rec.manifest_path = manifest_for(o.out);
    }
    rec.config = {{"threshold", o.threshold}, {"hide", o.hide}, {"tree_depth", o.tree_depth}};
    return rec;
}

CommandRecord cmd_export_dot(const ExportDotOptions& o, std::ostream& log) {
    CommandRecord rec;
    const auto j = read_json_file(o.model);
    std::string dot;
    if (j.is_object() && j.value("format", std::string{}) == kReducedModelFormat) {
        const auto m = reduced_model_from_json(j);
        dot = to_dot(m.model.dag, NameIndex(m.schema));
    } else {
        const auto m = global_model_from_json(j);
        dot = to_dot(m.dag, NameIndex(m.schema));
    }
    write_text_file(o.out, dot);
    rec.inputs = {o.model};
    rec.outputs = {o.out};
    rec.manifest_path = manifest_for(o.out);
    log << "wrote " << o.out << "\n";
    return rec;
}

bool replay(const std::string& manifest_path, std::ostream& log) {
    const auto m = read_json_file(manifest_path);
    std::vector<std::string> argv;
    std::string cwd;
    nlohmann::json inputs;
    nlohmann::json outputs;
    try {
        argv = m.at("argv").get<std::vector<std::string>>();
        cwd = m.at("cwd").get<std::string>();
        inputs = m.at("inputs");
        outputs = m.at("outputs");
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("malformed manifest " + manifest_path + ": " + e.what());
    }
    if (!argv.empty() && argv.front() == "replay") {
        throw UsageError("a replay manifest cannot itself be replayed");
    }
    const auto previous = std::filesystem::current_path();
    std::filesystem::current_path(cwd);
    struct Restore {
        std::filesystem::path dir;
        ~Restore() { std::filesystem::current_path(dir); }
    } restore{previous};

    for (const auto& [path, hash] : inputs.items()) {
        if (file_hash(path) != hash.get<std::string>()) {
            throw UsageError("input " + path + " changed since the recorded run");
        }
    }
    std::ostringstream sink;
    const int code = run(argv, sink, log);
    if (code != 0) {
        log << sink.str();
        throw UsageError("replayed command failed with exit code " + std::to_string(code));
    }
    bool identical = true;
    for (const auto& [path, hash] : outputs.items()) {
        const bool same = file_hash(path) == hash.get<std::string>();
        identical = identical && same;
        log << (same ? "identical  " : "DIFFERS    ") << path << "\n";
    }
    return identical;
}

namespace {

void write_manifest(const std::string& command, const std::vector<std::string>& argv,
                    const CommandRecord& rec, double millis) {
    nlohmann::json inputs = nlohmann::json::object();
    for (const auto& p : rec.inputs) {
        inputs[p] = file_hash(p);
    }
    nlohmann::json outputs = nlohmann::json::object();
    for (const auto& p : rec.outputs) {
        outputs[p] = file_hash(p);
    }
    nlohmann::json seeds = nlohmann::json::object();
    if (rec.config.contains("seed")) {
        seeds["seed"] = rec.config["seed"];
    }
    const nlohmann::json manifest = {{"tool", "rcbn"},
                                     {"command", command},
                                     {"argv", argv},
                                     {"cwd", std::filesystem::current_path().string()},
                                     {"config", rec.config},
                                     {"seeds", seeds},
                                     {"inputs", inputs},
                                     {"outputs", outputs},
                                     {"timings_ms", {{"total", millis}}}};
    write_text_file(rec.manifest_path, manifest.dump(1) + "\n");
}

void add_budget_flags(CLI::App* app, ExplorationBudget& b) {
    app->add_option("--max-parents", b.max_parent_set_size, "Largest parent set explored")
        ->capture_default_str();
    app->add_option("--max-candidates", b.max_candidates_per_node, "Candidate sets kept per node")
        ->capture_default_str();
    app->add_option("--max-expansions", b.max_expansions_per_node, "Frontier pops per node")
        ->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Label-centric Bayesian network learning and root cause extraction", "rcbn"};
    app.require_subcommand(1);
    std::uint64_t seed_value = 0;

    GenerateOptions gen;
    auto* g = app.add_subcommand("generate", "Generate a synthetic diagnosis CSV");
    g->add_option("--spec", gen.spec_path, "Generator spec JSON (default: builtin medical spec)");
    g->add_option("--out", gen.out, "Output CSV")->required();
    g->add_option("--dump-spec", gen.dump_spec, "Also write the spec used as JSON");
    auto* g_seed = g->add_option("--seed", seed_value, "Override the spec seed");

    SplitOptions split;
    auto* sp = app.add_subcommand("split", "Stratified train/test split of a CSV");
    sp->add_option("data", split.data, "Input CSV")->required();
    sp->add_option("--stratify", split.strata, "Columns whose joint state is preserved")
        ->delimiter(',');
    sp->add_option("--test-fraction", split.test_fraction, "Share of rows in the test part")
        ->capture_default_str();
    sp->add_option("--train", split.train_out, "Training CSV")->required();
    sp->add_option("--test", split.test_out, "Test CSV")->required();
    auto* sp_seed = sp->add_option("--seed", seed_value, "Shuffle seed");

    LearnOptions learn;
    learn.jobs = default_jobs();
    auto* l = app.add_subcommand("learn", "Learn the global network from a CSV");
    l->add_option("data", learn.data, "Training CSV")->required();
    l->add_option("--labels", learn.labels, "Label columns, in priority order")
        ->delimiter(',')
        ->required();
    l->add_option("--ignore", learn.ignore, "Columns to drop")->delimiter(',');
    l->add_option("--bins", learn.bins, "Quantile bins for numeric columns")->capture_default_str();
    add_budget_flags(l, learn.budget);
    l->add_option("--jobs", learn.jobs, "Worker threads");
    l->add_option("--out", learn.out, "Model JSON")->required();
    auto* l_seed = l->add_option("--seed", seed_value, "Seed for the unreached-node order");

    AddLabelOptions add;
    add.jobs = default_jobs();
    auto* a = app.add_subcommand("add-label", "Add a label to a learned model incrementally");
    a->add_option("model", add.model, "Global model JSON")->required();
    a->add_option("data", add.data, "Training CSV holding the new label column")->required();
    a->add_option("--label", add.label, "New label column")->required();
    a->add_option("--jobs", add.jobs, "Worker threads");
    a->add_option("--out", add.out, "Updated model JSON")->required();

    ReduceOptions reduce;
    reduce.ga.jobs = default_jobs();
    auto* r = app.add_subcommand("reduce", "Extract the label-specific reduced model");
    r->add_option("model", reduce.model, "Global model JSON")->required();
    r->add_option("--data", reduce.data, "Training CSV")->required();
    r->add_option("--label", reduce.label, "Label to explain")->required();
    r->add_option("--K", reduce.ga.K, "Elite population size")->capture_default_str();
    r->add_option("--max-gen", reduce.ga.max_gen, "Generation cap")->capture_default_str();
    r->add_option("--patience", reduce.ga.patience, "Stagnant generations before stopping")
        ->capture_default_str();
    r->add_option("--plateau", reduce.ga.plateau, "Smallest improvement that resets stagnation")
        ->capture_default_str();
    r->add_option("--tau", reduce.ga.tau, "Characteristic state number (0: 3 x label states)")
        ->capture_default_str();
    r->add_option("--C", reduce.ga.C, "Regularization weight")->capture_default_str();
    r->add_option("--mutation-rate", reduce.ga.mutation_rate, "Per-gene flip probability")
        ->capture_default_str();
    r->add_flag("--exhaustive", reduce.ga.exhaustive, "Enumerate every ancestor subset");
    r->add_option("--alpha", reduce.alpha, "CPT smoothing pseudo-count")->capture_default_str();
    r->add_option("--jobs", reduce.ga.jobs, "Worker threads");
    r->add_option("--out", reduce.out, "Reduced model JSON")->required();
    auto* r_seed = r->add_option("--seed", seed_value, "GA seed");

    EvalOptions ev;
    ev.jobs = default_jobs();
    auto* e = app.add_subcommand("eval", "Evaluate a reduced model on a test CSV");
    e->add_option("model", ev.model, "Reduced model JSON")->required();
    e->add_option("test", ev.test, "Test CSV")->required();
    e->add_option("--threshold", ev.threshold, "Positive iff P(label=1) >= threshold")
        ->capture_default_str();
    e->add_option("--hide", ev.hide, "Variables treated as unobserved")->delimiter(',');
    e->add_option("--train", ev.train, "Training CSV for the decision-tree baseline");
    e->add_option("--tree-depth", ev.tree_depth, "Decision-tree depth limit")->capture_default_str();
    e->add_option("--jobs", ev.jobs, "Worker threads");
    e->add_option("--out", ev.out, "Metrics JSON");

    ExportDotOptions dot;
    auto* d = app.add_subcommand("export-dot", "Write a model graph as Graphviz DOT");
    d->add_option("model", dot.model, "Global or reduced model JSON")->required();
    d->add_option("--out", dot.out, "DOT file")->required();

    std::string manifest;
    auto* rp = app.add_subcommand("replay", "Re-run a manifest and compare output hashes");
    rp->add_option("manifest", manifest, "Manifest JSON")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& ex) {
        const int code = app.exit(ex, out, err);
        return code == 0 ? 0 : 2;
    }

    auto seed_if = [&](CLI::Option* opt) -> std::optional<std::uint64_t> {
        return opt->count() ? std::optional<std::uint64_t>(seed_value) : std::nullopt;
    };

    try {
        const auto start = std::chrono::steady_clock::now();
        CommandRecord rec;
        std::string command;
        if (g->parsed()) {
            command = "generate";
            gen.seed = seed_if(g_seed);
            rec = cmd_generate(gen, out);
        } else if (sp->parsed()) {
            command = "split";
            split.seed = seed_if(sp_seed);
            rec = cmd_split(split, out);
        } else if (l->parsed()) {
            command = "learn";
            learn.seed = seed_if(l_seed);
            rec = cmd_learn(learn, out);
        } else if (a->parsed()) {
            command = "add-label";
            rec = cmd_add_label(add, out);
        } else if (r->parsed()) {
            command = "reduce";
            reduce.seed = seed_if(r_seed);
            rec = cmd_reduce(reduce, out);
        } else if (e->parsed()) {
            command = "eval";
            rec = cmd_eval(ev, out);
        } else if (d->parsed()) {
            command = "export-dot";
            rec = cmd_export_dot(dot, out);
        } else {
            return replay(manifest, out) ? 0 : 1;
        }
        const double millis =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        if (!rec.manifest_path.empty()) {
            std::vector<std::string> recorded = args;
            if (rec.drawn_seed) {
                recorded.push_back("--seed");
                recorded.push_back(std::to_string(*rec.drawn_seed));
            }
            write_manifest(command, recorded, rec, millis);
        }
        return 0;
    } catch (const UsageError& ex) {
        err << "error: " << ex.what() << "\n";
        return 2;
    } catch (const std::exception& ex) {
        err << "internal error: " << ex.what() << "\n";
        return 1;
    }
}

}  // namespace rcbn::cli

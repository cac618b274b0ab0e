#include "rcbn/dataset.hpp"

#include <algorithm>
#include <iterator>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

namespace rcbn {

namespace {

std::optional<double> parse_number(std::string_view cell) {
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) {
        cell.remove_prefix(1);
    }
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) {
        cell.remove_suffix(1);
    }
    if (cell.empty()) {
        return std::nullopt;
    }
    if (cell.front() == '+') {
        cell.remove_prefix(1);
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

std::optional<bool> parse_bool(std::string_view cell) {
    std::string lower(cell);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "true" || lower == "1") {
        return true;
    }
    if (lower == "false" || lower == "0") {
        return false;
    }
    return std::nullopt;
}

bool contains_name(const std::vector<std::string>& names, std::string_view name) {
    return std::find(names.begin(), names.end(), name) != names.end();
}

}  // namespace

std::vector<std::string> RawTable::column_names() const {
    std::vector<std::string> names;
    names.reserve(columns.size());
    for (const auto& c : columns) {
        names.push_back(c.name);
    }
    return names;
}

std::optional<std::size_t> RawTable::find(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i].name == name) {
            return i;
        }
    }
    return std::nullopt;
}

const RawColumn& RawTable::column(std::string_view name) const {
    const auto idx = find(name);
    if (!idx) {
        throw UsageError("unknown column '" + std::string(name) + "'");
    }
    return columns[*idx];
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string cell;
    bool in_quotes = false;
    bool cell_started = false;
    std::size_t i = 0;
    if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF &&
        static_cast<unsigned char>(text[1]) == 0xBB && static_cast<unsigned char>(text[2]) == 0xBF) {
        i = 3;
    }
    auto end_row = [&] {
        row.push_back(std::move(cell));
        cell.clear();
        // a line holding nothing at all is skipped
        if (!(row.size() == 1 && row[0].empty() && !cell_started)) {
            rows.push_back(std::move(row));
        }
        row.clear();
        cell_started = false;
    };
    for (; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    cell.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                cell.push_back(c);
            }
            continue;
        }
        switch (c) {
        case '"':
            in_quotes = true;
            cell_started = true;
            break;
        case ',':
            row.push_back(std::move(cell));
            cell.clear();
            cell_started = true;
            break;
        case '\r':
            if (i + 1 < text.size() && text[i + 1] == '\n') {
                ++i;
            }
            end_row();
            break;
        case '\n':
            end_row();
            break;
        default:
            cell.push_back(c);
            cell_started = true;
        }
    }
    if (in_quotes) {
        throw UsageError("csv: unterminated quoted field");
    }
    if (cell_started || !cell.empty() || !row.empty()) {
        end_row();
    }
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != rows[0].size()) {
            throw UsageError("csv: ragged row " + std::to_string(r + 1) + " has " +
                             std::to_string(rows[r].size()) + " fields, header has " +
                             std::to_string(rows[0].size()));
        }
    }
    return rows;
}

namespace {

std::string quote_cell(const std::string& cell) {
    if (cell.find_first_of(",\"\r\n") == std::string::npos) {
        return cell;
    }
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') {
            out.push_back('"');
        }
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

}  // namespace

std::string format_csv(const RawTable& table) {
    std::string out;
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        if (c) {
            out.push_back(',');
        }
        out += quote_cell(table.columns[c].name);
    }
    out += "\r\n";
    for (std::size_t r = 0; r < table.n_rows; ++r) {
        for (std::size_t c = 0; c < table.columns.size(); ++c) {
            if (c) {
                out.push_back(',');
            }
            out += quote_cell(table.columns[c].cells[r]);
        }
        out += "\r\n";
    }
    return out;
}

RawTable table_from_csv_text(std::string_view text, const LoadOptions& options) {
    auto rows = parse_csv(text);
    if (rows.size() < 2) {
        throw UsageError("empty file");
    }
    const auto& header = rows[0];
    {
        std::vector<std::string> sorted = header;
        std::sort(sorted.begin(), sorted.end());
        const auto dup = std::adjacent_find(sorted.begin(), sorted.end());
        if (dup != sorted.end()) {
            throw UsageError("duplicate column name '" + *dup + "'");
        }
    }
    for (const auto& name : options.label_names) {
        if (!contains_name(header, name)) {
            throw UsageError("unknown label name '" + name + "'");
        }
        if (contains_name(options.ignore_columns, name)) {
            throw UsageError("label '" + name + "' is also ignored");
        }
    }
    for (const auto& name : options.boolean_columns) {
        if (!contains_name(header, name)) {
            throw UsageError("unknown boolean column '" + name + "'");
        }
    }
    for (const auto& name : options.ignore_columns) {
        if (!contains_name(header, name)) {
            throw UsageError("unknown ignored column '" + name + "'");
        }
    }

    RawTable table;
    table.n_rows = rows.size() - 1;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (contains_name(options.ignore_columns, header[c])) {
            continue;
        }
        RawColumn col;
        col.name = header[c];
        col.is_label = contains_name(options.label_names, col.name);
        col.cells.reserve(table.n_rows);
        for (std::size_t r = 1; r < rows.size(); ++r) {
            col.cells.push_back(std::move(rows[r][c]));
        }
        if (contains_name(options.boolean_columns, col.name)) {
            for (const auto& cell : col.cells) {
                if (!cell.empty() && !parse_bool(cell)) {
                    throw UsageError("column '" + col.name + "' declared boolean but holds '" +
                                     cell + "'");
                }
            }
            col.type = ColumnType::Boolean;
        } else {
            const bool numeric = std::all_of(col.cells.begin(), col.cells.end(), [](const auto& s) {
                return s.empty() || parse_number(s).has_value();
            });
            col.type = numeric ? ColumnType::Numeric : ColumnType::Text;
        }
        table.columns.push_back(std::move(col));
    }
    return table;
}

RawTable load_csv(const std::filesystem::path& path, const LoadOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw UsageError("cannot open '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) {
        throw UsageError("read failure on '" + path.string() + "'");
    }
    return table_from_csv_text(buf.str(), options);
}

void write_csv(const std::filesystem::path& path, const RawTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw UsageError("cannot write '" + path.string() + "'");
    }
    out << format_csv(table);
    if (!out) {
        throw UsageError("write failure on '" + path.string() + "'");
    }
}

std::pair<RawTable, RawTable> stratified_split(const RawTable& table,
                                               const std::vector<std::string>& strata,
                                               double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw UsageError("test fraction must lie in (0, 1)");
    }
    std::vector<const RawColumn*> keys;
    for (const auto& name : strata) {
        keys.push_back(&table.column(name));
    }
    std::map<std::vector<std::string>, std::vector<std::size_t>> groups;
    for (std::size_t r = 0; r < table.n_rows; ++r) {
        std::vector<std::string> key;
        for (const auto* col : keys) {
            key.push_back(col->cells[r]);
        }
        groups[key].push_back(r);
    }
    std::vector<bool> in_test(table.n_rows, false);
    Rng rng(seed);
    for (auto& [key, rows] : groups) {
        rng.shuffle(rows);
        const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * rows.size()));
        for (std::size_t i = 0; i < n_test; ++i) {
            in_test[rows[i]] = true;
        }
    }
    RawTable train;
    RawTable test;
    for (const auto& col : table.columns) {
        RawColumn a{col.name, col.type, col.is_label, {}};
        RawColumn b{col.name, col.type, col.is_label, {}};
        for (std::size_t r = 0; r < table.n_rows; ++r) {
            (in_test[r] ? b : a).cells.push_back(col.cells[r]);
        }
        train.columns.push_back(std::move(a));
        test.columns.push_back(std::move(b));
    }
    train.n_rows = static_cast<std::size_t>(std::count(in_test.begin(), in_test.end(), false));
    test.n_rows = table.n_rows - train.n_rows;
    return {std::move(train), std::move(test)};
}

Dataset::Dataset(std::vector<Variable> variables, std::vector<std::vector<std::uint32_t>> columns)
    : variables_(std::move(variables)), columns_(std::move(columns)) {
    if (variables_.size() != columns_.size()) {
        throw InternalError("dataset: variable/column count mismatch");
    }
    n_rows_ = columns_.empty() ? 0 : columns_[0].size();
    for (std::size_t v = 0; v < variables_.size(); ++v) {
        if (variables_[v].cardinality < 1) {
            throw InternalError("dataset: cardinality < 1 for '" + variables_[v].name + "'");
        }
        if (columns_[v].size() != n_rows_) {
            throw InternalError("dataset: column length mismatch for '" + variables_[v].name + "'");
        }
        const auto card = static_cast<std::uint32_t>(variables_[v].cardinality);
        for (std::uint32_t x : columns_[v]) {
            if (x >= card && x != kUnobserved) {
                throw InternalError("dataset: code out of range in '" + variables_[v].name + "'");
            }
        }
    }
}

std::optional<VarId> Dataset::find(std::string_view name) const {
    for (std::size_t i = 0; i < variables_.size(); ++i) {
        if (variables_[i].name == name) {
            return static_cast<VarId>(i);
        }
    }
    return std::nullopt;
}

VarId Dataset::id_of(std::string_view name) const {
    const auto id = find(name);
    if (!id) {
        throw UsageError("unknown variable '" + std::string(name) + "'");
    }
    return *id;
}

std::vector<VarId> Dataset::label_ids() const {
    std::vector<VarId> out;
    for (std::size_t i = 0; i < variables_.size(); ++i) {
        if (variables_[i].kind == VariableKind::Label) {
            out.push_back(static_cast<VarId>(i));
        }
    }
    return out;
}

void Dataset::set_kind(VarId id, VariableKind kind) { variables_.at(static_cast<std::size_t>(id)).kind = kind; }

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const {
    std::vector<std::vector<std::uint32_t>> cols(columns_.size());
    for (std::size_t v = 0; v < columns_.size(); ++v) {
        cols[v].reserve(rows.size());
        for (std::size_t r : rows) {
            cols[v].push_back(columns_[v].at(r));
        }
    }
    return Dataset(variables_, std::move(cols));
}

double quantile_type7(std::span<const double> sorted, double p) {
    if (sorted.empty()) {
        throw InternalError("quantile of empty sample");
    }
    const double h = static_cast<double>(sorted.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) {
        return sorted.back();
    }
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

std::vector<double> quantile_edges(std::vector<double> values, int n_bins) {
    if (n_bins < 2) {
        throw UsageError("n_bins must be >= 2");
    }
    std::vector<double> edges;
    if (values.empty()) {
        return edges;
    }
    std::sort(values.begin(), values.end());
    const double max = values.back();
    // few distinct values: one bin each, so no observed state is merged away
    std::vector<double> distinct;
    std::unique_copy(values.begin(), values.end(), std::back_inserter(distinct));
    if (distinct.size() <= static_cast<std::size_t>(n_bins)) {
        distinct.pop_back();
        return distinct;
    }
    double lower = -std::numeric_limits<double>::infinity();
    for (int i = 1; i < n_bins; ++i) {
        const double e = quantile_type7(values, static_cast<double>(i) / n_bins);
        if (e >= max || e <= lower) {
            continue;
        }
        // keep the edge only if (lower, e] holds data; otherwise the empty bin merges upward
        const auto first_above = std::upper_bound(values.begin(), values.end(), lower);
        if (first_above != values.end() && *first_above <= e) {
            edges.push_back(e);
            lower = e;
        }
    }
    return edges;
}

std::uint32_t bin_of(double value, std::span<const double> edges) {
    return static_cast<std::uint32_t>(std::lower_bound(edges.begin(), edges.end(), value) -
                                      edges.begin());
}

namespace {

struct EncodedColumn {
    Variable var;
    std::vector<std::uint32_t> codes;
};

EncodedColumn encode_fresh(const RawColumn& col, const std::vector<std::size_t>& rows, int n_bins) {
    EncodedColumn out;
    out.var.name = col.name;
    out.var.kind = col.is_label ? VariableKind::Label : VariableKind::Feature;
    out.var.source = col.type;
    out.codes.reserve(rows.size());
    bool any_missing = false;
    std::uint32_t n_present_codes = 0;
    switch (col.type) {
    case ColumnType::Numeric: {
        std::vector<double> values;
        values.reserve(rows.size());
        for (std::size_t r : rows) {
            if (auto v = parse_number(col.cells[r])) {
                values.push_back(*v);
            }
        }
        auto edges = quantile_edges(values, n_bins);
        for (std::size_t r : rows) {
            if (auto v = parse_number(col.cells[r])) {
                out.codes.push_back(bin_of(*v, edges));
            } else {
                out.codes.push_back(kUnobserved);
                any_missing = true;
            }
        }
        n_present_codes = values.empty() ? 0 : static_cast<std::uint32_t>(edges.size() + 1);
        out.var.bin_edges = std::move(edges);
        break;
    }
    case ColumnType::Boolean: {
        out.var.categories = {"false", "true"};
        for (std::size_t r : rows) {
            if (auto b = parse_bool(col.cells[r])) {
                out.codes.push_back(*b ? 1U : 0U);
            } else {
                out.codes.push_back(kUnobserved);
                any_missing = true;
            }
        }
        n_present_codes = 2;
        break;
    }
    case ColumnType::Text: {
        std::unordered_map<std::string, std::uint32_t> index;
        for (std::size_t r : rows) {
            const auto& cell = col.cells[r];
            if (cell.empty()) {
                out.codes.push_back(kUnobserved);
                any_missing = true;
                continue;
            }
            auto [it, inserted] = index.try_emplace(cell, static_cast<std::uint32_t>(index.size()));
            if (inserted) {
                out.var.categories.push_back(cell);
            }
            out.codes.push_back(it->second);
        }
        n_present_codes = static_cast<std::uint32_t>(out.var.categories.size());
        break;
    }
    }
    if (any_missing) {
        out.var.has_missing = true;
        for (auto& c : out.codes) {
            if (c == kUnobserved) {
                c = n_present_codes;
            }
        }
        out.var.cardinality = static_cast<int>(n_present_codes + 1);
    } else {
        out.var.cardinality = std::max(1, static_cast<int>(n_present_codes));
    }
    return out;
}

std::vector<std::size_t> rows_with_labels(const RawTable& table,
                                          const std::vector<std::string>& label_columns) {
    std::vector<const RawColumn*> labels;
    for (const auto& name : label_columns) {
        labels.push_back(&table.column(name));
    }
    std::vector<std::size_t> rows;
    rows.reserve(table.n_rows);
    for (std::size_t r = 0; r < table.n_rows; ++r) {
        const bool complete = std::all_of(labels.begin(), labels.end(),
                                          [r](const RawColumn* c) { return !c->cells[r].empty(); });
        if (complete) {
            rows.push_back(r);
        }
    }
    return rows;
}

}  // namespace

Dataset discretize(const RawTable& table, int n_bins) {
    if (n_bins < 2) {
        throw UsageError("n_bins must be >= 2");
    }
    std::vector<std::string> label_columns;
    for (const auto& col : table.columns) {
        if (col.is_label) {
            label_columns.push_back(col.name);
        }
    }
    const auto rows = rows_with_labels(table, label_columns);
    if (rows.empty()) {
        throw UsageError("no rows left after rejecting rows with a missing label");
    }
    std::vector<Variable> vars;
    std::vector<std::vector<std::uint32_t>> cols;
    for (const auto& col : table.columns) {
        auto enc = encode_fresh(col, rows, n_bins);
        vars.push_back(std::move(enc.var));
        cols.push_back(std::move(enc.codes));
    }
    return Dataset(std::move(vars), std::move(cols));
}

Dataset encode_with_schema(const RawTable& table, const std::vector<Variable>& schema) {
    std::vector<std::string> label_columns;
    for (const auto& v : schema) {
        if (!table.find(v.name)) {
            throw UsageError("schema mismatch: column '" + v.name + "' missing from table");
        }
        if (v.kind == VariableKind::Label) {
            label_columns.push_back(v.name);
        }
    }
    const auto rows = rows_with_labels(table, label_columns);
    std::vector<std::vector<std::uint32_t>> cols;
    for (const auto& v : schema) {
        const auto& col = table.column(v.name);
        const std::uint32_t missing_code =
            v.has_missing ? static_cast<std::uint32_t>(v.cardinality - 1) : kUnobserved;
        std::vector<std::uint32_t> codes;
        codes.reserve(rows.size());
        for (std::size_t r : rows) {
            const auto& cell = col.cells[r];
            if (cell.empty()) {
                codes.push_back(missing_code);
                continue;
            }
            std::uint32_t code = kUnobserved;
            switch (v.source) {
            case ColumnType::Numeric:
                if (auto x = parse_number(cell)) {
                    code = bin_of(*x, v.bin_edges ? std::span<const double>(*v.bin_edges)
                                                  : std::span<const double>());
                    const auto present = static_cast<std::uint32_t>(v.cardinality - (v.has_missing ? 1 : 0));
                    if (code >= present) {
                        code = present == 0 ? kUnobserved : present - 1;
                    }
                }
                break;
            case ColumnType::Boolean:
                if (auto b = parse_bool(cell)) {
                    code = *b ? 1U : 0U;
                }
                break;
            case ColumnType::Text: {
                const auto it = std::find(v.categories.begin(), v.categories.end(), cell);
                if (it != v.categories.end()) {
                    code = static_cast<std::uint32_t>(it - v.categories.begin());
                }
                break;
            }
            }
            if (code == kUnobserved && v.kind == VariableKind::Label) {
                throw UsageError("label '" + v.name + "' holds value '" + cell +
                                 "' unknown to the model schema");
            }
            codes.push_back(code);
        }
        cols.push_back(std::move(codes));
    }
    return Dataset(schema, std::move(cols));
}

std::string_view to_string(VariableKind kind) { return kind == VariableKind::Label ? "label" : "feature"; }

std::string_view to_string(ColumnType type) {
    switch (type) {
    case ColumnType::Numeric:
        return "numeric";
    case ColumnType::Boolean:
        return "boolean";
    case ColumnType::Text:
        break;
    }
    return "text";
}

nlohmann::json schema_to_json(const std::vector<Variable>& variables) {
    auto arr = nlohmann::json::array();
    for (const auto& v : variables) {
        nlohmann::json j;
        j["name"] = v.name;
        j["cardinality"] = v.cardinality;
        j["kind"] = to_string(v.kind);
        j["source"] = to_string(v.source);
        j["bin_edges"] = v.bin_edges ? nlohmann::json(*v.bin_edges) : nlohmann::json(nullptr);
        j["categories"] = v.categories;
        j["has_missing"] = v.has_missing;
        arr.push_back(std::move(j));
    }
    return arr;
}

std::vector<Variable> schema_from_json(const nlohmann::json& j) {
    std::vector<Variable> out;
    for (const auto& item : j) {
        Variable v;
        v.name = item.at("name").get<std::string>();
        v.cardinality = item.at("cardinality").get<int>();
        const auto kind = item.at("kind").get<std::string>();
        if (kind != "label" && kind != "feature") {
            throw UsageError("schema: bad kind '" + kind + "'");
        }
        v.kind = kind == "label" ? VariableKind::Label : VariableKind::Feature;
        const auto source = item.value("source", std::string("numeric"));
        v.source = source == "text"      ? ColumnType::Text
                   : source == "boolean" ? ColumnType::Boolean
                                         : ColumnType::Numeric;
        if (item.contains("bin_edges") && !item["bin_edges"].is_null()) {
            v.bin_edges = item["bin_edges"].get<std::vector<double>>();
        }
        v.categories = item.value("categories", std::vector<std::string>{});
        v.has_missing = item.value("has_missing", false);
        if (v.cardinality < 1) {
            throw UsageError("schema: cardinality < 1 for '" + v.name + "'");
        }
        out.push_back(std::move(v));
    }
    return out;
}

std::string schema_hash(const std::vector<Variable>& variables) {
    return hash_hex(schema_to_json(variables).dump());
}

nlohmann::json dataset_to_json(const Dataset& ds) {
    nlohmann::json j;
    j["variables"] = schema_to_json(ds.variables());
    j["data"] = ds.columns();
    j["n_rows"] = ds.n_rows();
    return j;
}

Dataset dataset_from_json(const nlohmann::json& j) {
    auto vars = schema_from_json(j.at("variables"));
    auto cols = j.at("data").get<std::vector<std::vector<std::uint32_t>>>();
    Dataset ds(std::move(vars), std::move(cols));
    if (ds.n_rows() != j.at("n_rows").get<std::size_t>()) {
        throw UsageError("dataset json: n_rows disagrees with data");
    }
    return ds;
}

}  // namespace rcbn

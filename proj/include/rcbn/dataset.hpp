#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rcbn/util.hpp"

namespace rcbn {

enum class ColumnType { Numeric, Text, Boolean };
enum class VariableKind { Feature, Label };

struct RawColumn {
    std::string name;
    ColumnType type = ColumnType::Text;
    bool is_label = false;
    /// Cell text as read; an empty string is a missing cell.
    std::vector<std::string> cells;
};

struct RawTable {
    std::vector<RawColumn> columns;
    std::size_t n_rows = 0;

    std::vector<std::string> column_names() const;
    const RawColumn& column(std::string_view name) const;
    std::optional<std::size_t> find(std::string_view name) const;
};

struct LoadOptions {
    std::vector<std::string> label_names;
    /// Columns whose cells are all in {true,false,0,1} and should be coded as booleans.
    std::vector<std::string> boolean_columns;
    /// Columns dropped at load time.
    std::vector<std::string> ignore_columns;
};

/// RFC-4180 parsing of CSV text. Throws UsageError on ragged rows.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);
std::string format_csv(const RawTable& table);

RawTable load_csv(const std::filesystem::path& path, const LoadOptions& options);
RawTable table_from_csv_text(std::string_view text, const LoadOptions& options);
void write_csv(const std::filesystem::path& path, const RawTable& table);

/// Stratified split on the joint state of `strata` columns. Rows of each
/// stratum are shuffled with `seed` and the first round(fraction * size) go
/// to the test part. Row order within each part follows the input order.
std::pair<RawTable, RawTable> stratified_split(const RawTable& table,
                                               const std::vector<std::string>& strata,
                                               double test_fraction, std::uint64_t seed);

struct Variable {
    std::string name;
    int cardinality = 1;
    VariableKind kind = VariableKind::Feature;
    ColumnType source = ColumnType::Numeric;
    /// Interior cut points of a continuous column; bin k holds (edge[k-1], edge[k]].
    std::optional<std::vector<double>> bin_edges;
    /// Category text for Text/Boolean columns, indexed by code.
    std::vector<std::string> categories;
    /// The last code stands for a missing cell.
    bool has_missing = false;
    bool operator==(const Variable&) const = default;
};

/// Sentinel for an unobserved cell in a table encoded against an existing schema.
inline constexpr std::uint32_t kUnobserved = std::numeric_limits<std::uint32_t>::max();

class Dataset {
public:
    Dataset() = default;
    Dataset(std::vector<Variable> variables, std::vector<std::vector<std::uint32_t>> columns);

    std::size_t n_rows() const { return n_rows_; }
    std::size_t n_vars() const { return variables_.size(); }
    const std::vector<Variable>& variables() const { return variables_; }
    const Variable& variable(VarId id) const { return variables_.at(static_cast<std::size_t>(id)); }
    std::uint32_t cardinality(VarId id) const {
        return static_cast<std::uint32_t>(variables_[static_cast<std::size_t>(id)].cardinality);
    }
    std::span<const std::uint32_t> column(VarId id) const {
        return columns_[static_cast<std::size_t>(id)];
    }
    const std::vector<std::vector<std::uint32_t>>& columns() const { return columns_; }

    std::optional<VarId> find(std::string_view name) const;
    VarId id_of(std::string_view name) const;
    std::vector<VarId> label_ids() const;
    void set_kind(VarId id, VariableKind kind);

    /// Copy restricted to the given rows.
    Dataset select_rows(std::span<const std::size_t> rows) const;

    bool operator==(const Dataset&) const = default;

private:
    std::vector<Variable> variables_;
    std::vector<std::vector<std::uint32_t>> columns_;
    std::size_t n_rows_ = 0;
};

/// Type-7 empirical quantile of sorted values at probability p.
double quantile_type7(std::span<const double> sorted, double p);

/// Interior cut points for n_bins quantile bins over `values`; ties and empty
/// bins collapse so every resulting bin is occupied. A column with at most
/// n_bins distinct values gets one bin per value.
std::vector<double> quantile_edges(std::vector<double> values, int n_bins);

/// Code of a numeric value given cut points: the number of edges strictly below it.
std::uint32_t bin_of(double value, std::span<const double> edges);

Dataset discretize(const RawTable& table, int n_bins);

/// Encodes a table with the mapping of an existing schema. Unseen categories
/// and missing cells without a missing code become kUnobserved; rows with a
/// missing label are dropped. Throws UsageError if a schema column is absent.
Dataset encode_with_schema(const RawTable& table, const std::vector<Variable>& schema);

nlohmann::json schema_to_json(const std::vector<Variable>& variables);
std::vector<Variable> schema_from_json(const nlohmann::json& j);
std::string schema_hash(const std::vector<Variable>& variables);

nlohmann::json dataset_to_json(const Dataset& ds);
Dataset dataset_from_json(const nlohmann::json& j);

std::string_view to_string(VariableKind kind);
std::string_view to_string(ColumnType type);

}  // namespace rcbn

#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bayescloud/network.hpp"

namespace bayescloud {

/// Complete rows over named columns. Discrete cells store the state index
/// into the column's state list, continuous cells the value.
struct Dataset {
    std::vector<Variable> columns;
    std::vector<std::vector<double>> rows;

    std::size_t row_count() const noexcept { return rows.size(); }
    std::optional<std::size_t> column_index(std::string_view name) const;
};

/// CSV with a header row of variable names. With a schema, columns are typed
/// by the schema's variables (matched by name, extra columns rejected);
/// without one, all-numeric columns become continuous and the rest discrete
/// with states sorted lexicographically. Throws DataError / EmptyDataset.
Dataset read_csv(std::istream& in, const std::vector<Variable>* schema = nullptr);
Dataset read_csv_file(const std::string& path, const std::vector<Variable>* schema = nullptr);

void write_csv(std::ostream& out, const Dataset& data);

}  // namespace bayescloud

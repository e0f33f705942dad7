#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sbr/datamodel.hpp"

namespace sbr {

struct LabelledTable {
    std::vector<LabelledDatum> rows;
    std::optional<std::vector<double>> repaired;  // x_repaired column, if present
};

// Header row names the columns; x, u and s are required (any order),
// x_repaired is optional, anything else is ignored. Lines starting with '#'
// are comments. Throws SchemaError on a missing column, ParseError (line
// number) on a bad value.
LabelledTable read_labelled_csv(std::istream& in);
LabelledTable read_labelled_csv(const std::string& path);

// Shortest round-trip decimal form.
std::string format_double(double v);

void write_labelled_csv(std::ostream& out, const std::vector<LabelledDatum>& rows,
                        const std::vector<double>* repaired = nullptr,
                        const std::vector<std::string>& comments = {});

}  // namespace sbr

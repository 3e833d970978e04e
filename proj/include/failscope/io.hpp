#pragma once

#include <iosfwd>
#include <string>

#include <nlohmann/json.hpp>

#include "failscope/core.hpp"

namespace failscope {

/// CSV with a header row: one column per variable, then fitness, verdict, source.
/// Enumerated variables are written by symbol; fitness with 17 significant digits.
void write_dataset_csv(std::ostream& os, const LabeledDataset& ds);
std::string dataset_to_csv(const LabeledDataset& ds);

/// Parses a dataset written by write_dataset_csv. The header must name the
/// variables of `space` in order. Throws ParseError.
LabeledDataset read_dataset_csv(std::istream& is, const InputSpace& space);
LabeledDataset read_dataset_csv_file(const std::string& path, const InputSpace& space);

nlohmann::json space_to_json(const InputSpace& space);
InputSpace space_from_json(const nlohmann::json& j);

std::string read_text_file(const std::string& path);
/// Throws InvalidConfig when the file cannot be written.
void write_text_file(const std::string& path, const std::string& content);

}  // namespace failscope

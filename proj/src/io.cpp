#include "failscope/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace failscope {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

Scalar parse_number(const std::string& s, std::size_t line_no) {
  Scalar v = 0.0;
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end)
    raise(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": '" + s + "' is not a number");
  return v;
}

}  // namespace

void write_dataset_csv(std::ostream& os, const LabeledDataset& ds) {
  const auto& space = ds.space();
  for (const auto& v : space.variables()) os << v.name() << ',';
  os << "fitness,verdict,source\n";
  char buf[40];
  for (const auto& r : ds.rows()) {
    for (std::size_t i = 0; i < space.size(); ++i) {
      const auto idx = static_cast<Eigen::Index>(i);
      if (space[i].is_real()) {
        std::snprintf(buf, sizeof buf, "%.17g", r.input[idx]);
        os << buf << ',';
      } else {
        os << space[i].symbols().at(static_cast<std::size_t>(r.input[idx])) << ',';
      }
    }
    std::snprintf(buf, sizeof buf, "%.17g", r.fitness);
    os << buf << ',' << to_string(r.label()) << ',' << to_string(r.source) << '\n';
  }
}

std::string dataset_to_csv(const LabeledDataset& ds) {
  std::ostringstream os;
  write_dataset_csv(os, ds);
  return os.str();
}

LabeledDataset read_dataset_csv(std::istream& is, const InputSpace& space) {
  std::string line;
  if (!std::getline(is, line)) raise(ErrorCode::ParseError, "dataset is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  if (header.size() != space.size() + 3) raise(ErrorCode::ParseError, "header has the wrong number of columns");
  for (std::size_t i = 0; i < space.size(); ++i)
    if (header[i] != space[i].name()) raise(ErrorCode::ParseError, "header column '" + header[i] + "' does not match variable '" + space[i].name() + "'");
  if (header[space.size()] != "fitness" || header[space.size() + 1] != "verdict" || header[space.size() + 2] != "source")
    raise(ErrorCode::ParseError, "header must end with fitness,verdict,source");

  LabeledDataset ds(space);
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) raise(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": wrong number of columns");
    LabeledRow row;
    row.input = TestInput(static_cast<Eigen::Index>(space.size()));
    for (std::size_t i = 0; i < space.size(); ++i) {
      Scalar v = 0.0;
      if (space[i].is_real()) {
        v = parse_number(cells[i], line_no);
      } else {
        const auto& syms = space[i].symbols();
        const auto it = std::find(syms.begin(), syms.end(), cells[i]);
        if (it == syms.end()) raise(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": unknown symbol '" + cells[i] + "'");
        v = static_cast<Scalar>(it - syms.begin());
      }
      row.input[static_cast<Eigen::Index>(i)] = v;
    }
    if (!space.conforms(row.input)) raise(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": input outside the space");
    row.fitness = parse_number(cells[space.size()], line_no);
    const auto& v = cells[space.size() + 1];
    if (v != "pass" && v != "fail") raise(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": verdict must be pass or fail");
    if (v != to_string(row.label())) raise(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": verdict disagrees with fitness");
    const auto& s = cells[space.size() + 2];
    if (s == "executed") row.source = RowSource::Executed;
    else if (s == "predicted") row.source = RowSource::Predicted;
    else raise(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": source must be executed or predicted");
    ds.append(std::move(row));
  }
  return ds;
}

LabeledDataset read_dataset_csv_file(const std::string& path, const InputSpace& space) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::ParseError, "cannot open '" + path + "'");
  return read_dataset_csv(in, space);
}

nlohmann::json space_to_json(const InputSpace& space) {
  nlohmann::json vars = nlohmann::json::array();
  for (const auto& v : space.variables()) {
    if (v.is_real())
      vars.push_back({{"name", v.name()}, {"type", "real"}, {"lower", v.range().lower}, {"upper", v.range().upper}});
    else
      vars.push_back({{"name", v.name()}, {"type", "enum"}, {"symbols", v.symbols()}});
  }
  return vars;
}

InputSpace space_from_json(const nlohmann::json& j) {
  std::vector<InputVariable> vars;
  try {
    for (const auto& v : j) {
      if (v.at("type") == "real")
        vars.push_back(InputVariable::real(v.at("name"), v.at("lower"), v.at("upper")));
      else
        vars.push_back(InputVariable::enumerated(v.at("name"), v.at("symbols").get<std::vector<std::string>>()));
    }
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::ParseError, std::string("bad input space: ") + e.what());
  }
  return InputSpace(std::move(vars));
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::ParseError, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) raise(ErrorCode::InvalidConfig, "cannot write '" + path + "'");
}

}  // namespace failscope

#include "bookshelf/record_io.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace bookshelf {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_vector(const Eigen::VectorXd& v) {
  std::string out;
  for (int i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v[i]);
  }
  return out;
}

namespace {

double parse_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("not a number: '" + s + "'");
  }
  if (used != s.size()) throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

}  // namespace

Eigen::VectorXd parse_vector(const std::string& text) {
  std::vector<double> values;
  if (!text.empty()) {
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) values.push_back(parse_double(item));
  }
  Eigen::VectorXd v(static_cast<int>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) v[static_cast<int>(i)] = values[i];
  return v;
}

const std::string& Record::at(const std::string& key) const {
  auto it = fields.find(key);
  if (it == fields.end()) throw std::invalid_argument("record '" + tag + "' lacks field " + key);
  return it->second;
}

double Record::number(const std::string& key) const { return parse_double(at(key)); }

long long Record::integer(const std::string& key) const {
  const std::string& s = at(key);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument("not an integer: '" + s + "'");
  }
  return v;
}

Eigen::VectorXd Record::vector(const std::string& key) const { return parse_vector(at(key)); }

Record parse_record(const std::string& line) {
  Record r;
  std::stringstream ss(line);
  ss >> r.tag;
  std::string tok;
  while (ss >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("field without '=': " + tok);
    r.fields[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return r;
}

}  // namespace bookshelf

#pragma once

#include <map>
#include <string>

#include <Eigen/Core>

namespace bookshelf {

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);
/// Comma-separated, round-trip exact.
std::string format_vector(const Eigen::VectorXd& v);
/// Throws std::invalid_argument on malformed numbers.
Eigen::VectorXd parse_vector(const std::string& text);

/// One text record: a leading tag followed by space-separated key=value
/// fields, e.g. `entry index=3 objective=0.25 theta=1,2,3`.
struct Record {
  std::string tag;
  std::map<std::string, std::string> fields;

  const std::string& at(const std::string& key) const;
  double number(const std::string& key) const;
  long long integer(const std::string& key) const;
  Eigen::VectorXd vector(const std::string& key) const;
};

Record parse_record(const std::string& line);

}  // namespace bookshelf

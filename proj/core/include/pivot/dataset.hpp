#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "pivot/types.hpp"

namespace pivot {

// Dataset file format: UTF-8, header line "pivot-dataset v1", then one
// trajectory per line as a JSON object with lowercase field names. Images are
// base64 of raw row-major RGB bytes with explicit h and w. See
// docs/formats.md for the full schema.

inline constexpr const char* kDatasetHeader = "pivot-dataset v1";

class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::size_t line, const std::string& field, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ", field '" + field + "': " + what),
        line_(line),
        field_(field) {}

  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

std::vector<Trajectory> load_dataset(const std::string& path);
void save_dataset(const std::vector<Trajectory>& trajectories, const std::string& path);

// Single-record codec used by load/save and by tests.
std::string trajectory_to_line(const Trajectory& traj);
Trajectory trajectory_from_line(const std::string& line, std::size_t line_no = 0);

}  // namespace pivot
